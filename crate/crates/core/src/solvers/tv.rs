//! Anisotropic total-variation reconstruction by augmented Lagrangian with
//! alternating directions:
//!
//! ```text
//! min_x  Σ_n ‖D_n x‖₁ + (μ/2) ‖A x − y‖²
//! ```
//!
//! split as `w = D x` with multiplier `ν` and penalty `β`. The `w`-step is a
//! soft threshold, the `x`-step solves `(β DᵀD + μ AᵀA) x = Dᵀ(β w − ν) + μ Aᵀ y`
//! either by conjugate gradient or exactly through the Woodbury identity
//! around the DCT-diagonal Neumann Laplacian.
//!
//! `y` is divided by a data scale (see [`DataScale`]) before solving and the
//! result multiplied back, so `μ` and `β` are dimensionless and the solver
//! is equivariant under `y → c y`.

use serde::{Deserialize, Serialize};

use super::diff::{Boundary, Gradient};
use super::{GridShape, ReconImage, SolverKind};
use crate::error::{Error, Result};
use crate::linalg::{
    conjugate_gradient, dot, neumann_laplacian_eigenvalues, norm2, sub, Cholesky, Dct2d, Matrix,
};
use crate::scalar::Real;

/// Linear solver used for the quadratic `x`-subproblem.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XStep {
    /// `Direct` for Neumann boundaries, otherwise conjugate gradient.
    #[default]
    Auto,
    ConjugateGradient,
    Direct,
}

/// Internal normalization of the measurement vector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataScale {
    /// `mean |y|`.
    #[default]
    MeanAbs,
    /// Standard deviation of `y` about its mean. Ignores a common offset,
    /// so 0/1 and ±1 ensembles get comparable regularization.
    Spread,
    /// Solve in the caller's units.
    Off,
}

impl DataScale {
    pub fn of<T: Real>(self, y: &[T]) -> T {
        if y.is_empty() {
            return T::one();
        }
        let m = T::from_count(y.len());
        match self {
            DataScale::Off => T::one(),
            DataScale::MeanAbs => y.iter().map(|v| v.abs()).sum::<T>() / m,
            DataScale::Spread => {
                let mean = y.iter().copied().sum::<T>() / m;
                let var = y.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / m;
                let s = var.sqrt();
                // a constant vector has no spread; fall back to its size
                if s > T::lit(1e-12) * mean.abs() {
                    s
                } else {
                    mean.abs()
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvOptions {
    /// Data-fidelity weight, in units of `1 / data_scale`.
    pub mu: f64,
    /// Splitting penalty.
    pub beta_w: f64,
    pub max_outer: usize,
    /// Stop when `‖x_{k+1} − x_k‖ / ‖x_k‖` falls below this.
    pub rel_change_tol: f64,
    /// Clamp the final image at zero.
    #[serde(default)]
    pub nonneg: bool,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub x_step: XStep,
    #[serde(default)]
    pub data_scale: DataScale,
    #[serde(default = "default_cg_tol")]
    pub cg_tol: f64,
    #[serde(default = "default_cg_max_iter")]
    pub cg_max_iter: usize,
}

fn default_cg_tol() -> f64 {
    1e-8
}

fn default_cg_max_iter() -> usize {
    2000
}

impl Default for TvOptions {
    fn default() -> Self {
        Self {
            mu: 256.0,
            beta_w: 512.0,
            max_outer: 300,
            rel_change_tol: 1e-4,
            nonneg: false,
            boundary: Boundary::Neumann,
            x_step: XStep::Auto,
            data_scale: DataScale::MeanAbs,
            cg_tol: default_cg_tol(),
            cg_max_iter: default_cg_max_iter(),
        }
    }
}

impl TvOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |p: &'static str, r: &str| Err(Error::invalid("tv_admm", p, r));
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad("mu", "must be positive");
        }
        if !(self.beta_w > 0.0 && self.beta_w.is_finite()) {
            return bad("beta_w", "must be positive");
        }
        if self.max_outer == 0 {
            return bad("max_outer", "must be at least 1");
        }
        if !(self.rel_change_tol > 0.0) {
            return bad("rel_change_tol", "must be positive");
        }
        if !(self.cg_tol > 0.0) {
            return bad("cg_tol", "must be positive");
        }
        if self.x_step == XStep::Direct && self.boundary != Boundary::Neumann {
            return bad("x_step", "the direct x-step needs Neumann boundaries");
        }
        Ok(())
    }
}

/// Per-run diagnostics of [`tv_admm`].
#[derive(Debug, Clone, PartialEq)]
pub struct TvDiagnostics {
    /// Objective after every outer iteration, in the solver's internal units.
    pub objective_history: Vec<f64>,
    /// Effective data weight in the units of the caller's `y`.
    pub mu_effective: f64,
    pub converged: bool,
    pub x_step: XStep,
}

/// `‖D x‖₁ + (μ/2)‖A x − y‖²`
pub fn tv_objective<T: Real>(
    a: &Matrix<T>,
    y: &[T],
    x: &[T],
    shape: GridShape,
    boundary: Boundary,
    mu: T,
) -> T {
    let r = sub(&a.matvec(x), y);
    Gradient::new(shape, boundary).total_variation(x) + mu / T::lit(2.0) * dot(&r, &r)
}

fn shrink<T: Real>(v: T, t: T) -> T {
    let m = v.abs() - t;
    if m > T::zero() {
        v.signum() * m
    } else {
        T::zero()
    }
}

/// Exact solver for `(β L + μ AᵀA) x = r` with `L` the Neumann Laplacian.
///
/// `B = β L + γ e eᵀ` (with `e` the unit constant vector) is diagonal in the
/// 2-D DCT basis and invertible; the remainder `μ AᵀA − γ e eᵀ` enters via a
/// bordered Woodbury system whose leading block `I/μ + A B⁻¹ Aᵀ` is
/// Cholesky-factored once.
struct DirectXStep<'a, T> {
    a: &'a Matrix<T>,
    dct: Dct2d<T>,
    b_eig: Vec<T>,
    gamma: T,
    inner: Cholesky<T>,
    border: Option<(Vec<T>, Vec<T>, T)>,
}

impl<'a, T: Real> DirectXStep<'a, T> {
    fn new(a: &'a Matrix<T>, shape: GridShape, mu: T, beta: T) -> Result<Self> {
        let dct = Dct2d::new(shape.rows, shape.cols);
        let lr = neumann_laplacian_eigenvalues::<T>(shape.rows);
        let lc = neumann_laplacian_eigenvalues::<T>(shape.cols);
        let gamma = beta;
        let mut b_eig = Vec::with_capacity(shape.len());
        for &u in &lr {
            for &v in &lc {
                b_eig.push(beta * (u + v));
            }
        }
        b_eig[0] = gamma;
        let inv_sqrt: Vec<T> = b_eig.iter().map(|&l| T::one() / l.sqrt()).collect();
        let m = a.rows();
        let mut whitened = Matrix::zeros(m, shape.len());
        for i in 0..m {
            let c = dct.forward(a.row(i));
            for ((w, &ci), &s) in whitened.row_mut(i).iter_mut().zip(&c).zip(&inv_sqrt) {
                *w = ci * s;
            }
        }
        let mut s11 = whitened.gram_rows();
        for i in 0..m {
            s11[(i, i)] += T::one() / mu;
        }
        let inner = Cholesky::new(&s11)?;
        let n = shape.len();
        let sqrt_n = T::from_count(n).sqrt();
        let a_e: Vec<T> = (0..m)
            .map(|i| a.row(i).iter().copied().sum::<T>() / sqrt_n)
            .collect();
        let row_scale = (0..m).map(|i| norm2(a.row(i))).fold(T::zero(), T::max);
        let border = if norm2(&a_e) > T::lit(1e-10) * row_scale {
            let b: Vec<T> = a_e.iter().map(|&v| v / gamma).collect();
            let h = inner.solve(&b);
            let denom = dot(&b, &h);
            Some((b, h, denom))
        } else {
            None
        };
        Ok(Self {
            a,
            dct,
            b_eig,
            gamma,
            inner,
            border,
        })
    }

    fn apply_b_inv(&self, r: &[T]) -> Vec<T> {
        let mut c = self.dct.forward(r);
        c.iter_mut().zip(&self.b_eig).for_each(|(v, &l)| *v /= l);
        self.dct.inverse(&c)
    }

    fn solve(&self, r: &[T]) -> Vec<T> {
        let n = r.len();
        let sqrt_n = T::from_count(n).sqrt();
        let z = self.apply_b_inv(r);
        let f = self.a.matvec(&z);
        let (u, t) = match &self.border {
            Some((b, h, denom)) => {
                let g = z.iter().copied().sum::<T>() / sqrt_n;
                let t = (dot(h, &f) - g) / *denom;
                let rhs: Vec<T> = f.iter().zip(b).map(|(&fi, &bi)| fi - bi * t).collect();
                (self.inner.solve(&rhs), t)
            }
            None => (self.inner.solve(&f), T::zero()),
        };
        let back = self.apply_b_inv(&self.a.matvec_t(&u));
        let dc = t / (self.gamma * sqrt_n);
        z.iter().zip(&back).map(|(&zi, &bi)| zi - bi - dc).collect()
    }
}

const DIVERGENCE_SLACK: f64 = 1e-4;

/// Total-variation reconstruction; returns the image and per-iteration
/// diagnostics.
pub fn tv_admm<T: Real>(
    a: &Matrix<T>,
    y: &[T],
    shape: GridShape,
    opts: &TvOptions,
) -> Result<(ReconImage<T>, TvDiagnostics)> {
    opts.validate()?;
    let (m, n) = (a.rows(), a.cols());
    if y.len() != m {
        return Err(Error::invalid(
            "tv_admm",
            "y",
            format!("{} measurements for a {m}-row matrix", y.len()),
        ));
    }
    if shape.len() != n {
        return Err(Error::invalid(
            "tv_admm",
            "shape",
            format!("{}x{} grid for {n} matrix columns", shape.rows, shape.cols),
        ));
    }
    let x_step = match opts.x_step {
        XStep::Auto if opts.boundary == Boundary::Neumann => XStep::Direct,
        XStep::Auto => XStep::ConjugateGradient,
        other => other,
    };

    let scale = opts.data_scale.of(y);
    let mut diag = TvDiagnostics {
        objective_history: Vec::new(),
        mu_effective: opts.mu / scale.as_f64(),
        converged: true,
        x_step,
    };
    let mut img = ReconImage {
        rows: shape.rows,
        cols: shape.cols,
        values: vec![T::zero(); n],
        solver: SolverKind::Tv,
        iterations: 0,
        residual_norm: norm2(y),
        rank_deficient: false,
    };
    if scale == T::zero() || norm2(y) == T::zero() {
        diag.mu_effective = opts.mu;
        return Ok((img, diag));
    }

    let yt: Vec<T> = y.iter().map(|&v| v / scale).collect();
    let mu = T::lit(opts.mu);
    let beta = T::lit(opts.beta_w);
    let grad = Gradient::new(shape, opts.boundary);
    let direct = match x_step {
        XStep::Direct => Some(DirectXStep::new(a, shape, mu, beta)?),
        _ => None,
    };
    let normal_op = |v: &[T]| -> Vec<T> {
        let lv = grad.adjoint(&grad.apply(v));
        let ata = a.matvec_t(&a.matvec(v));
        lv.iter()
            .zip(&ata)
            .map(|(&l, &q)| beta * l + mu * q)
            .collect()
    };
    let aty: Vec<T> = a.matvec_t(&yt).into_iter().map(|v| v * mu).collect();

    let mut x = vec![T::zero(); n];
    let mut nu = vec![T::zero(); 2 * n];
    let mut dx = vec![T::zero(); 2 * n];
    let thresh = T::one() / beta;
    let mut streak = 0usize;
    let mut prev_obj = f64::INFINITY;
    diag.converged = false;

    for k in 1..=opts.max_outer {
        let w: Vec<T> = dx
            .iter()
            .zip(&nu)
            .map(|(&d, &l)| shrink(d + l / beta, thresh))
            .collect();
        let bw: Vec<T> = w.iter().zip(&nu).map(|(&wi, &li)| beta * wi - li).collect();
        let rhs: Vec<T> = grad
            .adjoint(&bw)
            .iter()
            .zip(&aty)
            .map(|(&p, &q)| p + q)
            .collect();
        let x_new = match &direct {
            Some(d) => d.solve(&rhs),
            None => {
                let mut xn = x.clone();
                conjugate_gradient(
                    normal_op,
                    &rhs,
                    &mut xn,
                    T::lit(opts.cg_tol),
                    opts.cg_max_iter,
                );
                xn
            }
        };
        dx = grad.apply(&x_new);
        for ((l, &d), &wi) in nu.iter_mut().zip(&dx).zip(&w) {
            *l += beta * (d - wi);
        }
        let r = sub(&a.matvec(&x_new), &yt);
        let obj = (dx.iter().map(|v| v.abs()).sum::<T>() + mu / T::lit(2.0) * dot(&r, &r)).as_f64();
        diag.objective_history.push(obj);
        // ADMM iterates are not a descent sequence; only rises beyond the
        // slack count towards divergence.
        if obj > prev_obj + DIVERGENCE_SLACK * prev_obj.abs() {
            streak += 1;
            if streak >= 10 {
                return Err(Error::NonConvergence {
                    iteration: k,
                    streak,
                    objective: obj,
                });
            }
        } else {
            streak = 0;
        }
        prev_obj = obj;

        let x_norm = norm2(&x);
        let change = norm2(&sub(&x_new, &x));
        x = x_new;
        img.iterations = k;
        if x_norm > T::zero() && change <= T::lit(opts.rel_change_tol) * x_norm {
            diag.converged = true;
            break;
        }
        if x_norm == T::zero() && change == T::zero() {
            diag.converged = true;
            break;
        }
    }

    if opts.nonneg {
        x.iter_mut().for_each(|v| *v = v.max(T::zero()));
    }
    x.iter_mut().for_each(|v| *v *= scale);
    img.residual_norm = norm2(&sub(&a.matvec(&x), y));
    img.values = x;
    Ok((img, diag))
}
