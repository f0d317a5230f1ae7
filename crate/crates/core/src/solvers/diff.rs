//! Forward finite differences on a row-major grid and their adjoint.

use serde::{Deserialize, Serialize};

use super::GridShape;
use crate::scalar::Real;

/// How differences behave at the last row and column.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Replicate edge: the difference across the border is zero.
    #[default]
    Neumann,
    /// Wrap around.
    Periodic,
}

/// Anisotropic gradient `D = [D_h; D_v]`, mapping `N` pixels to `2N` differences.
#[derive(Debug, Clone, Copy)]
pub struct Gradient {
    shape: GridShape,
    boundary: Boundary,
}

impl Gradient {
    pub fn new(shape: GridShape, boundary: Boundary) -> Self {
        Self { shape, boundary }
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn apply<T: Real>(&self, x: &[T]) -> Vec<T> {
        let GridShape { rows, cols } = self.shape;
        let n = rows * cols;
        debug_assert_eq!(x.len(), n);
        let periodic = self.boundary == Boundary::Periodic;
        let mut out = vec![T::zero(); 2 * n];
        let (dh, dv) = out.split_at_mut(n);
        for i in 0..rows {
            for j in 0..cols {
                let k = i * cols + j;
                if j + 1 < cols {
                    dh[k] = x[k + 1] - x[k];
                } else if periodic {
                    dh[k] = x[i * cols] - x[k];
                }
                if i + 1 < rows {
                    dv[k] = x[k + cols] - x[k];
                } else if periodic {
                    dv[k] = x[j] - x[k];
                }
            }
        }
        out
    }

    /// `Dᵀ p`
    pub fn adjoint<T: Real>(&self, p: &[T]) -> Vec<T> {
        let GridShape { rows, cols } = self.shape;
        let n = rows * cols;
        debug_assert_eq!(p.len(), 2 * n);
        let periodic = self.boundary == Boundary::Periodic;
        let (ph, pv) = p.split_at(n);
        let mut out = vec![T::zero(); n];
        for i in 0..rows {
            for j in 0..cols {
                let k = i * cols + j;
                if j + 1 < cols {
                    out[k + 1] += ph[k];
                    out[k] -= ph[k];
                } else if periodic {
                    out[i * cols] += ph[k];
                    out[k] -= ph[k];
                }
                if i + 1 < rows {
                    out[k + cols] += pv[k];
                    out[k] -= pv[k];
                } else if periodic {
                    out[j] += pv[k];
                    out[k] -= pv[k];
                }
            }
        }
        out
    }

    /// Anisotropic total variation `‖D x‖₁`.
    pub fn total_variation<T: Real>(&self, x: &[T]) -> T {
        self.apply(x).iter().map(|v| v.abs()).sum()
    }
}
