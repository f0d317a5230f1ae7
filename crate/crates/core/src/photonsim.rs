//! Coincidence-count forward model with shot noise and detector drift.
//!
//! The expected count for pattern `A` on object `T` is proportional to
//! `Σ_n A_n T_n`, calibrated so the all-ones pattern yields
//! `fullwhite_rate · integration_s` coincidences.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::fmt_real;
use crate::scalar::Real;
use crate::scene::Phantom;
use crate::sensing::SensingEnsemble;

const MODULE: &str = "photonsim";

/// Lower clamp on the realized detector-efficiency factor.
pub const MIN_EFFICIENCY: f64 = 0.05;

/// Coincidence rate with the full-white pattern, counts/s.
pub const FULLWHITE_RATE: f64 = 400.0;
/// Longest integration interval per pattern, s.
pub const MAX_INTEGRATION_S: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Coincidences per second for the all-ones pattern with the object in place.
    pub fullwhite_rate: f64,
    /// Seconds per displayed pattern.
    pub integration_s: f64,
    pub shot_noise: bool,
    /// Accidental coincidences per second, independent of the pattern.
    #[serde(default)]
    pub background_rate: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            fullwhite_rate: FULLWHITE_RATE,
            integration_s: MAX_INTEGRATION_S,
            shot_noise: true,
            background_rate: 0.0,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fullwhite_rate > 0.0 && self.fullwhite_rate.is_finite()) {
            return Err(Error::invalid(MODULE, "fullwhite_rate", "must be positive"));
        }
        if !(self.integration_s > 0.0 && self.integration_s.is_finite()) {
            return Err(Error::invalid(
                MODULE,
                "integration_s",
                format!("must be positive, got {}", self.integration_s),
            ));
        }
        if !(self.background_rate >= 0.0 && self.background_rate.is_finite()) {
            return Err(Error::invalid(
                MODULE,
                "background_rate",
                "must be non-negative",
            ));
        }
        Ok(())
    }

    /// Expected full-white coincidences per measurement.
    pub fn photons_per_measurement(&self) -> f64 {
        self.fullwhite_rate * self.integration_s
    }
}

/// Slow multiplicative efficiency drift: a sinusoid times a log-normal
/// random walk, clamped below at [`MIN_EFFICIENCY`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftModel {
    pub sine_amplitude: f64,
    /// Period in pair-index units.
    pub sine_period: f64,
    /// Per-pair standard deviation of the log random walk.
    pub walk_sigma: f64,
    pub seed: u64,
    /// When set, the two frames of a pair see different factors.
    #[serde(default)]
    pub per_frame: bool,
}

impl Default for DriftModel {
    fn default() -> Self {
        Self {
            sine_amplitude: 0.10,
            sine_period: 200.0,
            walk_sigma: 0.002,
            seed: 0,
            per_frame: false,
        }
    }
}

impl DriftModel {
    /// `g ≡ 1`.
    pub fn disabled() -> Self {
        Self {
            sine_amplitude: 0.0,
            walk_sigma: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sine_amplitude >= 0.0 && self.sine_amplitude.is_finite()) {
            return Err(Error::invalid(
                MODULE,
                "sine_amplitude",
                "must be non-negative",
            ));
        }
        if !(self.sine_period > 0.0 && self.sine_period.is_finite()) {
            return Err(Error::invalid(MODULE, "sine_period", "must be positive"));
        }
        if !(self.walk_sigma >= 0.0 && self.walk_sigma.is_finite()) {
            return Err(Error::invalid(MODULE, "walk_sigma", "must be non-negative"));
        }
        Ok(())
    }

    fn sine(&self, t_pairs: f64) -> f64 {
        1.0 + self.sine_amplitude * (std::f64::consts::TAU * t_pairs / self.sine_period).sin()
    }

    /// Efficiency factors `(g⁺_m, g⁻_m)` for `m_pairs` consecutive pairs.
    pub fn factors(&self, m_pairs: usize) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut log_walk = 0.0_f64;
        let mut step = |rng: &mut ChaCha8Rng, sigma: f64| {
            if sigma > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                log_walk += sigma * z;
            }
            log_walk.exp()
        };
        let clamp = |g: f64| g.max(MIN_EFFICIENCY);
        (0..m_pairs)
            .map(|m| {
                let t = m as f64;
                if self.per_frame {
                    let sigma = self.walk_sigma / std::f64::consts::SQRT_2;
                    let w_pos = if m == 0 { 1.0 } else { step(&mut rng, sigma) };
                    let g_pos = clamp(self.sine(t) * w_pos);
                    let w_neg = step(&mut rng, sigma);
                    let g_neg = clamp(self.sine(t + 0.5) * w_neg);
                    (g_pos, g_neg)
                } else {
                    let w = if m == 0 {
                        1.0
                    } else {
                        step(&mut rng, self.walk_sigma)
                    };
                    let g = clamp(self.sine(t) * w);
                    (g, g)
                }
            })
            .collect()
    }
}

/// Calibration-free overlap `Σ_n A_n T_n`.
fn overlap<T: Real>(pattern: &[u8], phantom: &Phantom<T>) -> T {
    pattern
        .iter()
        .zip(phantom.values())
        .filter(|(&a, _)| a != 0)
        .map(|(_, &t)| t)
        .sum()
}

/// Expected (drift-free) coincidence count for one displayed pattern.
pub fn expected_counts<T: Real>(
    pattern: &[u8],
    phantom: &Phantom<T>,
    cfg: &NoiseConfig,
) -> Result<T> {
    cfg.validate()?;
    if pattern.len() != phantom.len() {
        return Err(Error::invalid(
            MODULE,
            "pattern",
            format!(
                "{} pattern pixels vs {} phantom pixels",
                pattern.len(),
                phantom.len()
            ),
        ));
    }
    let total = phantom.total_transmission();
    if !(total > T::zero()) {
        return Err(Error::invalid(
            MODULE,
            "phantom",
            "all-zero phantom leaves the calibration undefined",
        ));
    }
    Ok(scaled_count(overlap(pattern, phantom), total, cfg))
}

fn scaled_count<T: Real>(overlap: T, total: T, cfg: &NoiseConfig) -> T {
    T::lit(cfg.fullwhite_rate * cfg.integration_s) * overlap / total
        + T::lit(cfg.background_rate * cfg.integration_s)
}

/// Simulated coincidence counts for every pair of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord<T> {
    pub c_pos: Vec<T>,
    pub c_neg: Vec<T>,
    /// `S_m = C⁺_m + C⁻_m`
    pub s: Vec<T>,
    /// True efficiency factors `(g⁺, g⁻)`; oracle data, simulation only.
    pub g_true: Vec<(f64, f64)>,
    pub noise: NoiseConfig,
    pub drift: DriftModel,
    pub seed: u64,
}

impl<T: Real> MeasurementRecord<T> {
    /// Builds a record from measured counts; `S` is recomputed.
    pub fn from_counts(c_pos: Vec<T>, c_neg: Vec<T>) -> Result<Self> {
        if c_pos.len() != c_neg.len() {
            return Err(Error::invalid(
                MODULE,
                "counts",
                "c_pos and c_neg lengths differ",
            ));
        }
        let s = c_pos.iter().zip(&c_neg).map(|(&a, &b)| a + b).collect();
        let m = c_pos.len();
        Ok(Self {
            c_pos,
            c_neg,
            s,
            g_true: vec![(1.0, 1.0); m],
            noise: NoiseConfig::default(),
            drift: DriftModel::disabled(),
            seed: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.c_pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c_pos.is_empty()
    }

    /// CSV with header `pair_index,c_pos,c_neg,s,g_true`; per-frame drift
    /// adds a `g_true_neg` column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pair_index,c_pos,c_neg,s,g_true");
        if self.drift.per_frame {
            out.push_str(",g_true_neg");
        }
        out.push('\n');
        for m in 0..self.len() {
            let _ = write!(
                out,
                "{m},{},{},{},{}",
                fmt_real(self.c_pos[m].as_f64()),
                fmt_real(self.c_neg[m].as_f64()),
                fmt_real(self.s[m].as_f64()),
                fmt_real(self.g_true[m].0)
            );
            if self.drift.per_frame {
                let _ = write!(out, ",{}", fmt_real(self.g_true[m].1));
            }
            out.push('\n');
        }
        out
    }
}

/// Draws one record: `C±_m = Poisson(g_m λ±_m)` with shot noise, `g_m λ±_m` without.
pub fn simulate_record<T: Real>(
    ensemble: &SensingEnsemble,
    phantom: &Phantom<T>,
    cfg: &NoiseConfig,
    drift: &DriftModel,
    seed: u64,
) -> Result<MeasurementRecord<T>> {
    cfg.validate()?;
    drift.validate()?;
    let mut rec = simulate_with_factors(
        ensemble,
        phantom,
        cfg,
        &drift.factors(ensemble.m_pairs()),
        seed,
    )?;
    rec.drift = *drift;
    Ok(rec)
}

/// Like [`simulate_record`] but with explicit efficiency factors `(g⁺_m, g⁻_m)`.
pub fn simulate_with_factors<T: Real>(
    ensemble: &SensingEnsemble,
    phantom: &Phantom<T>,
    cfg: &NoiseConfig,
    factors: &[(f64, f64)],
    seed: u64,
) -> Result<MeasurementRecord<T>> {
    cfg.validate()?;
    if ensemble.n_pixels() != phantom.len() {
        return Err(Error::invalid(
            MODULE,
            "phantom",
            format!(
                "ensemble has {} pixels, phantom has {}",
                ensemble.n_pixels(),
                phantom.len()
            ),
        ));
    }
    if factors.len() != ensemble.m_pairs() {
        return Err(Error::invalid(
            MODULE,
            "factors",
            "one efficiency pair per measurement pair required",
        ));
    }
    if factors.iter().any(|&(a, b)| !(a > 0.0 && b > 0.0)) {
        return Err(Error::invalid(
            MODULE,
            "factors",
            "efficiency factors must be positive",
        ));
    }
    let total = phantom.total_transmission();
    if !(total > T::zero()) {
        return Err(Error::invalid(
            MODULE,
            "phantom",
            "all-zero phantom leaves the calibration undefined",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |lambda: T| -> T {
        if !cfg.shot_noise {
            return lambda;
        }
        let l = lambda.as_f64();
        if l <= 0.0 {
            return T::zero();
        }
        let k: f64 = Poisson::new(l)
            .expect("finite positive rate")
            .sample(&mut rng);
        T::lit(k)
    };
    let m = ensemble.m_pairs();
    let (mut c_pos, mut c_neg, mut s) = (
        Vec::with_capacity(m),
        Vec::with_capacity(m),
        Vec::with_capacity(m),
    );
    for (pair, &(gp, gn)) in ensemble.pairs().iter().zip(factors) {
        let lp = scaled_count(overlap(&pair.pos, phantom), total, cfg) * T::lit(gp);
        let ln = scaled_count(overlap(&pair.neg, phantom), total, cfg) * T::lit(gn);
        let cp = draw(lp);
        let cn = draw(ln);
        c_pos.push(cp);
        c_neg.push(cn);
        s.push(cp + cn);
    }
    Ok(MeasurementRecord {
        c_pos,
        c_neg,
        s,
        g_true: factors.to_vec(),
        noise: *cfg,
        drift: DriftModel::disabled(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::DoubleSlit;
    use crate::sensing::build_ensemble;

    fn noiseless() -> NoiseConfig {
        NoiseConfig {
            shot_noise: false,
            ..NoiseConfig::default()
        }
    }

    fn slit() -> Phantom<f64> {
        DoubleSlit::default().render().unwrap()
    }

    #[test]
    fn full_white_pattern_gives_rate_times_interval() {
        let p = slit();
        let lambda = expected_counts(&vec![1u8; p.len()], &p, &noiseless()).unwrap();
        assert!((lambda - 4000.0).abs() < 1e-9);
    }

    #[test]
    fn dark_pattern_gives_zero() {
        let p = slit();
        assert_eq!(
            expected_counts(&vec![0u8; p.len()], &p, &noiseless()).unwrap(),
            0.0
        );
    }

    #[test]
    fn half_transmission_pattern_gives_half_counts() {
        // left half of the grid holds exactly one of the two symmetric slits
        let p = slit();
        let pattern: Vec<u8> = (0..p.len())
            .map(|k| u8::from(k % p.cols() < p.cols() / 2))
            .collect();
        let lambda = expected_counts(&pattern, &p, &noiseless()).unwrap();
        assert!((lambda - 2000.0).abs() < 1e-9);
    }

    #[test]
    fn all_zero_phantom_rejected() {
        let p = Phantom::new(2, 2, vec![0.0; 4], 1.0, 1.0).unwrap();
        assert!(expected_counts(&[1, 1, 1, 1], &p, &noiseless()).is_err());
    }

    #[test]
    fn noiseless_pair_sums_are_constant_without_drift() {
        let p = slit();
        let e = build_ensemble(p.len(), 50, 2).unwrap();
        let cfg = NoiseConfig {
            background_rate: 3.0,
            ..noiseless()
        };
        let rec = simulate_record(&e, &p, &cfg, &DriftModel::disabled(), 1).unwrap();
        for &s in &rec.s {
            assert!((s - (4000.0 + 2.0 * 30.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_drift_scales_every_count() {
        let p = slit();
        let e = build_ensemble(p.len(), 20, 2).unwrap();
        let base = simulate_record(&e, &p, &noiseless(), &DriftModel::disabled(), 1).unwrap();
        let drifted =
            simulate_with_factors(&e, &p, &noiseless(), &vec![(1.1, 1.1); 20], 1).unwrap();
        for (d, b) in drifted
            .c_pos
            .iter()
            .chain(&drifted.c_neg)
            .zip(base.c_pos.iter().chain(&base.c_neg))
        {
            assert!((d - 1.1 * b).abs() <= 1e-12 * d.abs());
        }
    }

    #[test]
    fn per_pair_drift_makes_sum_a_drift_probe() {
        let p = slit();
        let e = build_ensemble(p.len(), 300, 4).unwrap();
        let drift = DriftModel {
            seed: 8,
            ..DriftModel::default()
        };
        let rec = simulate_record(&e, &p, &noiseless(), &drift, 1).unwrap();
        for (s, &(g, _)) in rec.s.iter().zip(&rec.g_true) {
            assert!((s - 4000.0 * g).abs() < 1e-9 * s);
        }
    }

    #[test]
    fn records_are_deterministic() {
        let p = slit();
        let e = build_ensemble(p.len(), 30, 4).unwrap();
        let drift = DriftModel::default();
        let a = simulate_record(&e, &p, &NoiseConfig::default(), &drift, 11).unwrap();
        let b = simulate_record(&e, &p, &NoiseConfig::default(), &drift, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
        let c = simulate_record(&e, &p, &NoiseConfig::default(), &drift, 12).unwrap();
        assert_ne!(a.c_pos, c.c_pos);
    }

    #[test]
    fn shot_noise_counts_are_integers() {
        let p = slit();
        let e = build_ensemble(p.len(), 30, 4).unwrap();
        let rec =
            simulate_record(&e, &p, &NoiseConfig::default(), &DriftModel::default(), 3).unwrap();
        assert!(rec
            .c_pos
            .iter()
            .chain(&rec.c_neg)
            .all(|&c| c >= 0.0 && c.fract() == 0.0));
    }

    #[test]
    fn empirical_mean_converges_to_drifted_rate() {
        let p = slit();
        let e = build_ensemble(p.len(), 3, 4).unwrap();
        let drift = DriftModel {
            seed: 1,
            ..DriftModel::default()
        };
        let cfg = NoiseConfig::default();
        let reps = 10_000;
        let mut sum = [0.0; 3];
        for r in 0..reps {
            let rec = simulate_record(&e, &p, &cfg, &drift, r as u64).unwrap();
            for (acc, c) in sum.iter_mut().zip(&rec.c_pos) {
                *acc += c;
            }
        }
        let g = drift.factors(3);
        for (m, pair) in e.pairs().iter().enumerate() {
            let lambda = g[m].0 * expected_counts(&pair.pos, &p, &cfg).unwrap();
            let mean = sum[m] / reps as f64;
            let tol = 3.0 / (reps as f64 * lambda).sqrt();
            assert!(
                ((mean - lambda) / lambda).abs() < tol,
                "pair {m}: {mean} vs {lambda}"
            );
        }
    }

    #[test]
    fn integration_time_scales_linearly() {
        let p = slit();
        let pattern: Vec<u8> = (0..p.len()).map(|k| (k % 3 == 0) as u8).collect();
        let base = expected_counts(&pattern, &p, &noiseless()).unwrap();
        let doubled = expected_counts(
            &pattern,
            &p,
            &NoiseConfig {
                integration_s: 20.0,
                ..noiseless()
            },
        )
        .unwrap();
        assert!((doubled - 2.0 * base).abs() < 1e-9);
    }

    #[test]
    fn drift_factors_stay_above_clamp() {
        let drift = DriftModel {
            sine_amplitude: 0.99,
            sine_period: 17.0,
            walk_sigma: 0.05,
            seed: 5,
            per_frame: true,
        };
        let g = drift.factors(50_000);
        let min = g
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .fold(f64::INFINITY, f64::min);
        assert!(min >= MIN_EFFICIENCY);
        assert_eq!(g, drift.factors(50_000));
    }

    #[test]
    fn invalid_noise_config_rejected() {
        let cfg = NoiseConfig {
            integration_s: 0.0,
            ..NoiseConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
