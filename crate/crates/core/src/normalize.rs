//! Complementary normalization: each pair is rescaled by its own sum
//! `S_m`, which sees the full-white pattern and therefore only the drift.

use crate::error::{Error, Result};
use crate::photonsim::MeasurementRecord;
use crate::scalar::Real;
use crate::sensing::MatrixMode;

/// Measurement vectors consumed by the solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementVectors<T> {
    pub c_pos: Vec<T>,
    pub c_neg: Vec<T>,
    /// `c_pos − c_neg`
    pub delta: Vec<T>,
    /// Mean pair sum `C̄ = Σ S_m / M`.
    pub c_bar: T,
    pub normalized: bool,
}

impl<T: Real> MeasurementVectors<T> {
    fn assemble(c_pos: Vec<T>, c_neg: Vec<T>, normalized: bool) -> Self {
        let delta = c_pos.iter().zip(&c_neg).map(|(&a, &b)| a - b).collect();
        let m = c_pos.len();
        let c_bar = if m == 0 {
            T::zero()
        } else {
            c_pos.iter().zip(&c_neg).map(|(&a, &b)| a + b).sum::<T>() / T::from_count(m)
        };
        Self {
            c_pos,
            c_neg,
            delta,
            c_bar,
            normalized,
        }
    }

    pub fn len(&self) -> usize {
        self.c_pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c_pos.is_empty()
    }

    pub fn sums(&self) -> Vec<T> {
        self.c_pos
            .iter()
            .zip(&self.c_neg)
            .map(|(&a, &b)| a + b)
            .collect()
    }

    /// The vector paired with the given sensing matrix.
    pub fn for_mode(&self, mode: MatrixMode) -> &[T] {
        match mode {
            MatrixMode::Plus => &self.c_pos,
            MatrixMode::Minus => &self.c_neg,
            MatrixMode::Differential => &self.delta,
        }
    }

    /// Applies the pair-sum normalization to these vectors.
    pub fn renormalize(&self) -> Result<Self> {
        normalize_pairs(&self.c_pos, &self.c_neg)
    }
}

fn normalize_pairs<T: Real>(c_pos: &[T], c_neg: &[T]) -> Result<MeasurementVectors<T>> {
    let s: Vec<T> = c_pos.iter().zip(c_neg).map(|(&a, &b)| a + b).collect();
    if let Some(index) = s.iter().position(|&v| v == T::zero()) {
        return Err(Error::DegenerateMeasurement { index });
    }
    if let Some(i) = s.iter().position(|&v| !(v > T::zero())) {
        return Err(Error::invalid(
            "normalize",
            "s",
            format!("pair sum at {i} is not positive"),
        ));
    }
    let m = s.len();
    if m == 0 {
        return Ok(MeasurementVectors::assemble(Vec::new(), Vec::new(), true));
    }
    let c_bar = s.iter().copied().sum::<T>() / T::from_count(m);
    let scale: Vec<T> = s.iter().map(|&sm| c_bar / sm).collect();
    let pos = c_pos.iter().zip(&scale).map(|(&c, &k)| c * k).collect();
    let neg = c_neg.iter().zip(&scale).map(|(&c, &k)| c * k).collect();
    let mut out = MeasurementVectors::assemble(pos, neg, true);
    out.c_bar = c_bar;
    Ok(out)
}

/// `C±_m ← (C±_m / S_m) · C̄`; `ΔC` is formed from the normalized values.
pub fn normalize<T: Real>(record: &MeasurementRecord<T>) -> Result<MeasurementVectors<T>> {
    normalize_pairs(&record.c_pos, &record.c_neg)
}

/// Counts as-is, with `ΔC = C⁺ − C⁻`.
pub fn raw_vectors<T: Real>(record: &MeasurementRecord<T>) -> MeasurementVectors<T> {
    MeasurementVectors::assemble(record.c_pos.clone(), record.c_neg.clone(), false)
}
