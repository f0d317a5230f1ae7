//! Small dense linear-algebra kernels used by the solvers.
//!
//! Everything is row-major and single-threaded so that results are
//! reproducible bit-for-bit for identical inputs.

use num_traits::Float;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidMatrix {
                module: "linalg",
                reason: format!("{} entries for a {rows}x{cols} matrix", data.len()),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::InvalidMatrix {
                    module: "linalg",
                    reason: format!("row {i} has {} entries, expected {cols}", r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, idx: &[usize]) -> Self {
        Self::from_fn(self.rows, idx.len(), |i, k| self[(i, idx[k])])
    }

    /// Appends one row at the bottom.
    pub fn push_row(&mut self, row: &[T]) -> Result<()> {
        if row.len() != self.cols {
            return Err(Error::InvalidMatrix {
                module: "linalg",
                reason: format!(
                    "pushed row has {} entries, expected {}",
                    row.len(),
                    self.cols
                ),
            });
        }
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| v * c)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `y = Aᵀ x`
    pub fn matvec_t(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.rows);
        let mut y = vec![T::zero(); self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi != T::zero() {
                axpy(xi, self.row(i), &mut y);
            }
        }
        y
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a != T::zero() {
                    axpy(a, other.row(k), out.row_mut(i));
                }
            }
        }
        out
    }

    /// `A Aᵀ`
    pub fn gram_rows(&self) -> Self {
        let mut g = Self::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            for j in 0..=i {
                let v = dot(self.row(i), self.row(j));
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    pub fn column_norms(&self) -> Vec<T> {
        let mut acc = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            for (a, &v) in acc.iter_mut().zip(self.row(i)) {
                *a += v * v;
            }
        }
        acc.into_iter().map(Float::sqrt).collect()
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// `y += alpha x`
pub fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Real> Cholesky<T> {
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::InvalidMatrix {
                module: "linalg",
                reason: "cholesky of a non-square matrix".into(),
            });
        }
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) {
                return Err(Error::InvalidMatrix {
                    module: "linalg",
                    reason: format!("matrix not positive definite at pivot {j}"),
                });
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
                l[(i, j)] = s / d;
            }
        }
        Ok(Self { l })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.l.rows();
        let mut y = b.to_vec();
        for i in 0..n {
            let s = dot(&self.l.row(i)[..i], &y[..i]);
            y[i] = (y[i] - s) / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let s = y
                .iter()
                .enumerate()
                .skip(i + 1)
                .fold(y[i], |s, (k, &yk)| s - self.l[(k, i)] * yk);
            y[i] = s / self.l[(i, i)];
        }
        y
    }
}

/// Outcome of a conjugate-gradient solve.
#[derive(Debug, Clone, Copy)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Conjugate gradient for `K x = b` with `K` symmetric positive semidefinite,
/// starting from the contents of `x`. Stops when `‖b − Kx‖ ≤ tol·‖b‖`.
pub fn conjugate_gradient<T: Real>(
    apply: impl Fn(&[T]) -> Vec<T>,
    b: &[T],
    x: &mut [T],
    tol: T,
    max_iter: usize,
) -> CgStats {
    let bnorm = norm2(b);
    if bnorm == T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return CgStats {
            iterations: 0,
            relative_residual: 0.0,
        };
    }
    let kx = apply(x);
    let mut r = sub(b, &kx);
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut it = 0;
    while it < max_iter && rr.sqrt() > tol * bnorm {
        let kp = apply(&p);
        let pkp = dot(&p, &kp);
        if !(pkp > T::zero()) {
            break;
        }
        let alpha = rr / pkp;
        axpy(alpha, &p, x);
        axpy(-alpha, &kp, &mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for (pi, &ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rr = rr_new;
        it += 1;
    }
    CgStats {
        iterations: it,
        relative_residual: (rr.sqrt() / bnorm).as_f64(),
    }
}

/// Orthonormal DCT-II matrix of size `n`: `C[k][j] = s_k cos(π k (j + ½) / n)`.
///
/// Its rows are the eigenvectors of the Neumann forward-difference Laplacian.
pub fn dct2_matrix<T: Real>(n: usize) -> Matrix<T> {
    let nf = n as f64;
    Matrix::from_fn(n, n, |k, j| {
        let s = if k == 0 {
            (1.0 / nf).sqrt()
        } else {
            (2.0 / nf).sqrt()
        };
        T::lit(s * (std::f64::consts::PI * k as f64 * (j as f64 + 0.5) / nf).cos())
    })
}

/// Eigenvalues `4 sin²(π k / 2n)` of the 1-D Neumann Laplacian `DᵀD`.
pub fn neumann_laplacian_eigenvalues<T: Real>(n: usize) -> Vec<T> {
    (0..n)
        .map(|k| {
            let s = (std::f64::consts::PI * k as f64 / (2.0 * n as f64)).sin();
            T::lit(4.0 * s * s)
        })
        .collect()
}

/// Separable 2-D orthonormal DCT-II on a row-major `rows × cols` grid.
#[derive(Debug, Clone)]
pub struct Dct2d<T> {
    rows: usize,
    cols: usize,
    c_rows: Matrix<T>,
    c_cols: Matrix<T>,
}

impl<T: Real> Dct2d<T> {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            c_rows: dct2_matrix(rows),
            c_cols: dct2_matrix(cols),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// `C_r X C_cᵀ`
    pub fn forward(&self, x: &[T]) -> Vec<T> {
        self.apply(x, false)
    }

    /// `C_rᵀ Y C_c`
    pub fn inverse(&self, y: &[T]) -> Vec<T> {
        self.apply(y, true)
    }

    fn apply(&self, x: &[T], inverse: bool) -> Vec<T> {
        let (r, c) = (self.rows, self.cols);
        debug_assert_eq!(x.len(), r * c);
        // along each row (length c)
        let mut tmp = vec![T::zero(); r * c];
        for i in 0..r {
            let src = &x[i * c..(i + 1) * c];
            let dst = &mut tmp[i * c..(i + 1) * c];
            if inverse {
                for (k, &v) in src.iter().enumerate() {
                    axpy(v, self.c_cols.row(k), dst);
                }
            } else {
                for (k, d) in dst.iter_mut().enumerate() {
                    *d = dot(self.c_cols.row(k), src);
                }
            }
        }
        // along each column (length r)
        let mut out = vec![T::zero(); r * c];
        for k in 0..r {
            for i in 0..r {
                let w = if inverse {
                    self.c_rows[(i, k)]
                } else {
                    self.c_rows[(k, i)]
                };
                if w != T::zero() {
                    axpy(w, &tmp[i * c..(i + 1) * c], &mut out[k * c..(k + 1) * c]);
                }
            }
        }
        out
    }
}
