//! Orthogonal matching pursuit.
//!
//! The support grows one column at a time; the restricted least-squares fit
//! is kept current with an incremental QR factorization (modified
//! Gram–Schmidt, reorthogonalized once), so each step costs one correlation
//! pass plus `O(M k)`.

use serde::{Deserialize, Serialize};

use super::{GridShape, ReconImage, SolverKind};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm2, Matrix};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmpOptions {
    /// Support size cap; clipped to `min(M, N)`.
    pub max_sparsity: usize,
    /// Stop once `‖r‖ / ‖y‖ ≤ residual_tol`.
    pub residual_tol: f64,
}

impl Default for OmpOptions {
    fn default() -> Self {
        Self {
            max_sparsity: usize::MAX,
            residual_tol: 0.05,
        }
    }
}

/// Sparse recovery of `x` from `y ≈ A x`. Columns are normalized for the
/// selection step only; ties go to the lowest column index.
pub fn omp<T: Real>(
    a: &Matrix<T>,
    y: &[T],
    shape: GridShape,
    opts: &OmpOptions,
) -> Result<ReconImage<T>> {
    let (m, n) = (a.rows(), a.cols());
    if y.len() != m {
        return Err(Error::invalid(
            "omp",
            "y",
            format!("{} measurements for a {m}-row matrix", y.len()),
        ));
    }
    if shape.len() != n {
        return Err(Error::invalid(
            "omp",
            "shape",
            "grid size differs from the matrix column count",
        ));
    }
    if !(opts.residual_tol >= 0.0) {
        return Err(Error::invalid(
            "omp",
            "residual_tol",
            "must be non-negative",
        ));
    }
    let col_norms = a.column_norms();
    if let Some(j) = col_norms.iter().position(|&c| c == T::zero()) {
        return Err(Error::InvalidMatrix {
            module: "omp",
            reason: format!("column {j} is identically zero"),
        });
    }

    let cap = opts.max_sparsity.min(m).min(n);
    let tol = T::lit(opts.residual_tol);
    let y_norm = norm2(y);
    let mut img = ReconImage {
        rows: shape.rows,
        cols: shape.cols,
        values: vec![T::zero(); n],
        solver: SolverKind::Omp,
        iterations: 0,
        residual_norm: y_norm,
        rank_deficient: false,
    };
    if y_norm == T::zero() {
        return Ok(img);
    }

    let mut available = vec![true; n];
    let mut support: Vec<usize> = Vec::new();
    let mut q: Vec<Vec<T>> = Vec::new();
    // column k of R holds the k + 1 entries above and on the diagonal
    let mut r_cols: Vec<Vec<T>> = Vec::new();
    let mut qty: Vec<T> = Vec::new();
    let mut residual = y.to_vec();
    let angle_floor = T::lit(1e-12);
    let dependence_floor = T::lit(1e-10);

    while support.len() < cap && norm2(&residual) > tol * y_norm {
        let corr = a.matvec_t(&residual);
        let mut best: Option<(usize, T)> = None;
        for j in 0..n {
            if !available[j] {
                continue;
            }
            let c = corr[j].abs() / col_norms[j];
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((j, c));
            }
        }
        let Some((j, c)) = best else { break };
        if c <= angle_floor * norm2(&residual) {
            break;
        }
        available[j] = false;

        let mut v = a.column(j);
        let mut coeffs = vec![T::zero(); q.len()];
        for _pass in 0..2 {
            for (qi, ci) in q.iter().zip(coeffs.iter_mut()) {
                let h = dot(qi, &v);
                axpy(-h, qi, &mut v);
                *ci += h;
            }
        }
        let nu = norm2(&v);
        if nu <= dependence_floor * col_norms[j] {
            img.rank_deficient = true;
            continue;
        }
        v.iter_mut().for_each(|e| *e /= nu);
        coeffs.push(nu);
        let proj = dot(&v, &residual);
        axpy(-proj, &v, &mut residual);
        qty.push(dot(&v, y));
        q.push(v);
        r_cols.push(coeffs);
        support.push(j);
        img.iterations += 1;
    }

    // back substitution R x_S = Qᵀ y
    let k = support.len();
    let mut xs = qty.clone();
    for i in (0..k).rev() {
        let mut s = xs[i];
        for c in i + 1..k {
            s -= r_cols[c][i] * xs[c];
        }
        xs[i] = s / r_cols[i][i];
    }
    let mut fit = vec![T::zero(); m];
    for (&j, &xj) in support.iter().zip(&xs) {
        img.values[j] = xj;
        for (i, f) in fit.iter_mut().enumerate() {
            *f += a[(i, j)] * xj;
        }
    }
    img.residual_norm = norm2(&crate::linalg::sub(y, &fit));
    Ok(img)
}
