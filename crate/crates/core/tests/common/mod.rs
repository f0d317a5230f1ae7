//! Reference solvers shared by the integration tests. They avoid the
//! crate's own gradient and factorization code on purpose.
#![allow(dead_code)]

use ghostcs::linalg::{dot, norm2, Matrix};
use ghostcs::sensing::{build_ensemble, differential_matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Least squares on a two-column support via the 2×2 normal equations.
pub fn lsq2(a: &Matrix<f64>, y: &[f64], s: [usize; 2]) -> Option<(f64, [f64; 2])> {
    let c0 = a.column(s[0]);
    let c1 = a.column(s[1]);
    let g = [
        [dot(&c0, &c0), dot(&c0, &c1)],
        [dot(&c1, &c0), dot(&c1, &c1)],
    ];
    let b = [dot(&c0, y), dot(&c1, y)];
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    if det.abs() < 1e-9 {
        return None;
    }
    let x = [
        (b[0] * g[1][1] - b[1] * g[0][1]) / det,
        (g[0][0] * b[1] - g[1][0] * b[0]) / det,
    ];
    let r: Vec<f64> = (0..y.len())
        .map(|i| y[i] - x[0] * c0[i] - x[1] * c1[i])
        .collect();
    Some((norm2(&r), x))
}

/// Every residual-minimizing 2-sparse solution, by enumerating all supports.
pub fn brute_force_2sparse(a: &Matrix<f64>, y: &[f64]) -> Vec<Vec<f64>> {
    let n = a.cols();
    let mut best = f64::INFINITY;
    let mut found: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let Some((r, x)) = lsq2(a, y, [i, j]) else {
                continue;
            };
            let mut v = vec![0.0; n];
            v[i] = x[0];
            v[j] = x[1];
            if r < best - 1e-9 {
                best = r;
                found = vec![v];
            } else if (r - best).abs() <= 1e-9 {
                found.push(v);
            }
        }
    }
    found
}

/// 8×16 differential instance with a seeded 2-sparse signal {5, −3}.
pub fn two_sparse_instance(seed: u64) -> (Matrix<f64>, Vec<f64>, Vec<f64>) {
    let e = build_ensemble(16, 8, seed).unwrap();
    let a: Matrix<f64> = differential_matrix(&e).to_real();
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 1000);
    let p = rng.random_range(0..16);
    let mut q = rng.random_range(0..16);
    while q == p {
        q = rng.random_range(0..16);
    }
    let mut x0 = vec![0.0; 16];
    x0[p] = 5.0;
    x0[q] = -3.0;
    let y = a.matvec(&x0);
    (a, y, x0)
}

fn forward_diff(x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let n = rows * cols;
    let mut d = vec![0.0; 2 * n];
    for i in 0..rows {
        for j in 0..cols {
            let k = i * cols + j;
            if j + 1 < cols {
                d[k] = x[k + 1] - x[k];
            }
            if i + 1 < rows {
                d[n + k] = x[k + cols] - x[k];
            }
        }
    }
    d
}

fn forward_diff_t(p: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let n = rows * cols;
    let mut x = vec![0.0; n];
    for i in 0..rows {
        for j in 0..cols {
            let k = i * cols + j;
            if j + 1 < cols {
                x[k + 1] += p[k];
                x[k] -= p[k];
            }
            if i + 1 < rows {
                x[k + cols] += p[n + k];
                x[k] -= p[n + k];
            }
        }
    }
    x
}

/// `Σ|Dx| + μ/2 ‖Ax − y‖²` with Neumann forward differences.
pub fn objective(a: &Matrix<f64>, y: &[f64], x: &[f64], rows: usize, cols: usize, mu: f64) -> f64 {
    let r: Vec<f64> = a.matvec(x).iter().zip(y).map(|(u, v)| u - v).collect();
    forward_diff(x, rows, cols)
        .iter()
        .map(|v| v.abs())
        .sum::<f64>()
        + 0.5 * mu * dot(&r, &r)
}

fn spectral_norm_sq(a: &Matrix<f64>) -> f64 {
    let mut v = vec![1.0; a.cols()];
    let mut lam = 0.0;
    for _ in 0..200 {
        let w = a.matvec_t(&a.matvec(&v));
        lam = norm2(&w) / norm2(&v);
        let s = norm2(&w);
        v = w.iter().map(|x| x / s).collect();
    }
    lam
}

/// Condat–Vũ primal-dual proximal gradient for the anisotropic TV problem.
pub fn primal_dual_tv(
    a: &Matrix<f64>,
    y: &[f64],
    rows: usize,
    cols: usize,
    mu: f64,
    iters: usize,
) -> Vec<f64> {
    let n = rows * cols;
    let lf = mu * spectral_norm_sq(a) * 1.01;
    // ‖D‖² ≤ 8; step sizes satisfy τ (L_f / 2 + 8σ) < 1
    let sigma = lf / 16.0;
    let tau = 0.99 / (lf / 2.0 + 8.0 * sigma);
    let mut x = vec![0.0; n];
    let mut p = vec![0.0; 2 * n];
    for _ in 0..iters {
        let r: Vec<f64> = a.matvec(&x).iter().zip(y).map(|(u, v)| u - v).collect();
        let g = a.matvec_t(&r);
        let dtp = forward_diff_t(&p, rows, cols);
        let x_new: Vec<f64> = (0..n).map(|k| x[k] - tau * (mu * g[k] + dtp[k])).collect();
        let xbar: Vec<f64> = (0..n).map(|k| 2.0 * x_new[k] - x[k]).collect();
        let d = forward_diff(&xbar, rows, cols);
        for (pk, dk) in p.iter_mut().zip(&d) {
            *pk = (*pk + sigma * dk).clamp(-1.0, 1.0);
        }
        x = x_new;
    }
    x
}

/// Piecewise-constant test image.
pub fn blocks(rows: usize, cols: usize) -> Vec<f64> {
    (0..rows * cols)
        .map(|k| {
            let (i, j) = (k / cols, k % cols);
            if (3..9).contains(&i) && (2..6).contains(&j) {
                1.0
            } else if j >= cols - 4 && i >= rows / 2 {
                0.6
            } else {
                0.1
            }
        })
        .collect()
}

/// Anchored differential system on a `rows × cols` grid with mild
/// deterministic perturbation of the data.
pub fn anchored_instance(
    rows: usize,
    cols: usize,
    m: usize,
    seed: u64,
    noise: f64,
) -> (Matrix<f64>, Vec<f64>, Vec<f64>) {
    let n = rows * cols;
    let e = build_ensemble(n, m, seed).unwrap();
    let mut a: Matrix<f64> = differential_matrix(&e).to_real();
    a.push_row(&vec![1.0; n]).unwrap();
    let x0 = blocks(rows, cols);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
    let y: Vec<f64> = a
        .matvec(&x0)
        .into_iter()
        .map(|v| v + noise * rng.random_range(-1.0..1.0))
        .collect();
    (a, y, x0)
}
