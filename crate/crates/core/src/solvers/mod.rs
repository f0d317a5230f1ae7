//! Reconstruction from `y = A x`: greedy sparse recovery and total-variation
//! minimization. Both accept any real sensing matrix, so `A⁺`, `A⁻` and `ΔA`
//! run through identical code.

mod diff;
mod omp;
mod tv;

use std::fmt::Write as _;

pub use diff::{Boundary, Gradient};
pub use omp::{omp, OmpOptions};
pub use tv::{tv_admm, tv_objective, DataScale, TvDiagnostics, TvOptions, XStep};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::fmt_real;
use crate::scalar::Real;

/// Image grid dimensions; pixels are flattened row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridShape {
    pub rows: usize,
    pub cols: usize,
}

impl GridShape {
    pub const fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    pub const fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Omp,
    Tv,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Omp => "omp",
            SolverKind::Tv => "tv",
        }
    }
}

/// Real-valued reconstruction; background pixels may be negative.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconImage<T> {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<T>,
    pub solver: SolverKind,
    pub iterations: usize,
    /// `‖A x − y‖₂`
    pub residual_norm: T,
    /// OMP met a column linearly dependent on its support and skipped it.
    pub rank_deficient: bool,
}

impl<T: Real> ReconImage<T> {
    pub fn from_values(shape: GridShape, values: Vec<T>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::invalid(
                "solvers",
                "values",
                format!(
                    "{} values for a {}x{} image",
                    values.len(),
                    shape.rows,
                    shape.cols
                ),
            ));
        }
        Ok(Self {
            rows: shape.rows,
            cols: shape.cols,
            values,
            solver: SolverKind::Tv,
            iterations: 0,
            residual_norm: T::zero(),
            rank_deficient: false,
        })
    }

    pub fn shape(&self) -> GridShape {
        GridShape::new(self.rows, self.cols)
    }

    pub fn min_max(&self) -> (T, T) {
        self.values
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Long-format CSV: `row,col,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col,value\n");
        for i in 0..self.rows {
            for j in 0..self.cols {
                let _ = writeln!(
                    out,
                    "{i},{j},{}",
                    fmt_real(self.values[i * self.cols + j].as_f64())
                );
            }
        }
        out
    }

    /// P2 image with `min → 0`, `max → 65535`, plus the sidecar text that
    /// records the affine mapping.
    pub fn to_pgm(&self) -> (String, String) {
        let (lo, hi) = self.min_max();
        let (lo, hi) = (lo.as_f64(), hi.as_f64());
        let span = hi - lo;
        let mut pgm = format!("P2\n{} {}\n65535\n", self.cols, self.rows);
        for i in 0..self.rows {
            let line: Vec<String> = (0..self.cols)
                .map(|j| {
                    let v = self.values[i * self.cols + j].as_f64();
                    let g = if span > 0.0 {
                        ((v - lo) / span * 65535.0).round()
                    } else {
                        0.0
                    };
                    (g as u32).to_string()
                })
                .collect();
            let _ = writeln!(pgm, "{}", line.join(" "));
        }
        let sidecar = format!(
            "maxval 65535\nvalue_at_0 {}\nvalue_at_maxval {}\n# value = value_at_0 + gray / 65535 * (value_at_maxval - value_at_0)\n",
            fmt_real(lo),
            fmt_real(hi)
        );
        (pgm, sidecar)
    }
}
