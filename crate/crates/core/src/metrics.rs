//! Image-quality figures: contrast-to-noise ratio with the `|min|` threshold
//! rule, and relative error against the ground truth up to a fitted scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::fmt_real;
use crate::scalar::Real;
use crate::scene::Phantom;
use crate::solvers::ReconImage;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CnrReport {
    /// `|min|` of the image.
    pub threshold: f64,
    pub n_signal: usize,
    pub n_background: usize,
    pub mean_signal: f64,
    pub mean_background: f64,
    /// Population standard deviation of the background.
    pub std_background: f64,
    pub cnr: f64,
}

impl CnrReport {
    pub const CSV_HEADER: &'static str =
        "threshold,n_signal,n_background,mean_signal,mean_background,std_background,cnr";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            fmt_real(self.threshold),
            self.n_signal,
            self.n_background,
            fmt_real(self.mean_signal),
            fmt_real(self.mean_background),
            fmt_real(self.std_background),
            fmt_real(self.cnr)
        )
    }
}

/// Mean and population standard deviation.
pub fn mean_std<T: Real>(v: &[T]) -> (T, T) {
    let n = T::from_count(v.len());
    let mean = v.iter().copied().sum::<T>() / n;
    let var = v.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n;
    (mean, var.sqrt())
}

/// `(mean(T_s) − mean(T_b)) / std(T_b)`, with pixels `≤ |min|` counted as background.
pub fn cnr_values<T: Real>(values: &[T]) -> Result<CnrReport> {
    if values.is_empty() {
        return Err(Error::DegeneratePartition {
            reason: "empty image".into(),
        });
    }
    let min = values.iter().copied().fold(T::infinity(), T::min);
    let threshold = min.abs();
    let (background, signal): (Vec<T>, Vec<T>) = values.iter().partition(|&&v| v <= threshold);
    if signal.is_empty() {
        return Err(Error::DegeneratePartition {
            reason: format!("no pixel exceeds the threshold {:e}", threshold.as_f64()),
        });
    }
    if background.len() < 2 {
        return Err(Error::DegeneratePartition {
            reason: format!(
                "{} background pixel(s); at least 2 required",
                background.len()
            ),
        });
    }
    let (mean_s, _) = mean_std(&signal);
    let (mean_b, std_b) = mean_std(&background);
    if std_b == T::zero() {
        return Err(Error::UndefinedCnr);
    }
    Ok(CnrReport {
        threshold: threshold.as_f64(),
        n_signal: signal.len(),
        n_background: background.len(),
        mean_signal: mean_s.as_f64(),
        mean_background: mean_b.as_f64(),
        std_background: std_b.as_f64(),
        cnr: ((mean_s - mean_b) / std_b).as_f64(),
    })
}

pub fn cnr<T: Real>(image: &ReconImage<T>) -> Result<CnrReport> {
    cnr_values(&image.values)
}

/// `min_c ‖c x − T‖ / ‖T‖`, attained at `c = ⟨x, T⟩ / ⟨x, x⟩` (`c = 0` when
/// `x = 0`). Invariant under rescaling of `x`; equals 1 for `x ⊥ T`.
pub fn rel_error_values<T: Real>(x: &[T], truth: &[T]) -> Result<T> {
    if x.len() != truth.len() {
        return Err(Error::invalid(
            "metrics",
            "image",
            format!("{} pixels vs {} in the phantom", x.len(), truth.len()),
        ));
    }
    let tt: T = truth.iter().map(|&t| t * t).sum();
    if tt == T::zero() {
        return Err(Error::invalid(
            "metrics",
            "phantom",
            "all-zero ground truth",
        ));
    }
    let xx: T = x.iter().map(|&v| v * v).sum();
    if xx == T::zero() {
        return Ok(T::one());
    }
    let xt: T = x.iter().zip(truth).map(|(&a, &b)| a * b).sum();
    let c = xt / xx;
    let r: T = x
        .iter()
        .zip(truth)
        .map(|(&a, &b)| (c * a - b) * (c * a - b))
        .sum();
    Ok((r / tt).sqrt())
}

pub fn rel_error<T: Real>(image: &ReconImage<T>, phantom: &Phantom<T>) -> Result<T> {
    if image.rows != phantom.rows() || image.cols != phantom.cols() {
        return Err(Error::invalid(
            "metrics",
            "image",
            "grid differs from the phantom grid",
        ));
    }
    rel_error_values(&image.values, phantom.values())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_pixel_example() {
        let r = cnr_values(&[-0.10, 0.05, 0.90, 1.00]).unwrap();
        assert_eq!(r.threshold, 0.10);
        assert_eq!((r.n_background, r.n_signal), (2, 2));
        assert!((r.mean_signal - 0.95).abs() < 1e-15);
        assert!((r.mean_background + 0.025).abs() < 1e-15);
        assert!((r.std_background - 0.075).abs() < 1e-15);
        assert!((r.cnr - 13.0).abs() < 1e-12);
    }

    #[test]
    fn constant_image_is_degenerate() {
        assert!(matches!(
            cnr_values(&[0.3; 9]),
            Err(Error::DegeneratePartition { .. })
        ));
    }

    #[test]
    fn binary_image_has_undefined_cnr() {
        assert!(matches!(
            cnr_values(&[0.0, 0.0, 1.0, 1.0, 0.0]),
            Err(Error::UndefinedCnr)
        ));
    }

    #[test]
    fn positive_minimum_can_empty_the_signal_set() {
        // threshold 2 leaves a single background pixel
        assert!(cnr_values(&[2.0, 2.5, 3.0]).is_err());
        assert!(matches!(
            cnr_values(&[5.0, 5.0]),
            Err(Error::DegeneratePartition { .. })
        ));
    }

    #[test]
    fn tie_with_threshold_is_background() {
        let r = cnr_values(&[-0.5, 0.5, 0.2, 2.0]).unwrap();
        assert_eq!(r.n_background, 3);
    }

    #[test]
    fn population_std_of_two_values() {
        let (_, s) = mean_std(&[1.0, 4.0]);
        assert_eq!(s, 1.5);
    }

    #[test]
    fn shift_changes_partition() {
        let v = [-0.2, 0.1, 0.15, 0.3, 1.0, 1.1];
        let shifted: Vec<f64> = v.iter().map(|x| x + 0.5).collect();
        let a = cnr_values(&v).unwrap();
        let b = cnr_values(&shifted);
        assert!(b.map_or(true, |b| b.n_background != a.n_background || b.cnr != a.cnr));
    }

    #[test]
    fn rel_error_examples() {
        let t = [0.0, 1.0, 1.0, 0.5];
        let scaled: Vec<f64> = t.iter().map(|v| 5.0 * v).collect();
        assert!(rel_error_values(&scaled, &t).unwrap() < 1e-15);
        assert_eq!(rel_error_values(&[0.0; 4], &t).unwrap(), 1.0);
        // e ⊥ t
        let e = [0.01, 0.02, -0.02, 0.0];
        let x: Vec<f64> = t.iter().zip(&e).map(|(a, b)| a + b).collect();
        // ‖e‖/‖T‖ to first order; exactly ‖e‖/sqrt(‖T‖² + ‖e‖²)
        let (ee, tt) = (0.0009f64, 2.25f64);
        let got = rel_error_values(&x, &t).unwrap();
        assert!((got - (ee / (tt + ee)).sqrt()).abs() < 1e-14);
        assert!((got - (ee / tt).sqrt()).abs() < 1e-3 * (ee / tt).sqrt());
        // x ⊥ T
        assert!((rel_error_values(&[1.0, 0.0, 0.0, 0.0], &t).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rel_error_rejects_zero_truth() {
        assert!(rel_error_values(&[1.0, 2.0], &[0.0, 0.0]).is_err());
    }
}
