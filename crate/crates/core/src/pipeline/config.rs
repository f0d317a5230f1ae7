//! JSON scenario files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::photonsim::{DriftModel, NoiseConfig};
use crate::scene::{self, DoubleSlit};
use crate::sensing::MatrixMode;
use crate::solvers::{GridShape, OmpOptions, SolverKind, TvOptions};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSpec {
    pub rows: usize,
    pub cols: usize,
    pub pitch_x_um: f64,
    pub pitch_y_um: f64,
    pub slit_width_um: f64,
    pub separation_um: f64,
    pub beta: f64,
    /// Pattern grid `[rows, cols]` when larger than the reconstruction grid;
    /// the object is zero outside the centered crop.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern_grid: Option<[usize; 2]>,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        let d = DoubleSlit::default();
        Self {
            rows: d.rows,
            cols: d.cols,
            pitch_x_um: d.pitch_x_um,
            pitch_y_um: d.pitch_y_um,
            slit_width_um: d.slit_width_um,
            separation_um: d.separation_um,
            beta: d.beta,
            pattern_grid: None,
        }
    }
}

impl PhantomSpec {
    pub fn slit(&self) -> DoubleSlit {
        DoubleSlit {
            rows: self.rows,
            cols: self.cols,
            pitch_x_um: self.pitch_x_um,
            pitch_y_um: self.pitch_y_um,
            slit_width_um: self.slit_width_um,
            separation_um: self.separation_um,
            beta: self.beta,
        }
    }

    pub fn recon_shape(&self) -> GridShape {
        GridShape::new(self.rows, self.cols)
    }

    pub fn pattern_shape(&self) -> GridShape {
        match self.pattern_grid {
            Some([r, c]) => GridShape::new(r, c),
            None => self.recon_shape(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    /// Pattern pixel count; must equal the pattern grid size when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_pixels: Option<usize>,
    pub m_pairs: usize,
    pub seed: u64,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self {
            n_pixels: None,
            m_pairs: 400,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    On,
    Off,
}

impl Normalization {
    pub fn is_on(self) -> bool {
        self == Normalization::On
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Normalization::On => "on",
            Normalization::Off => "off",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SolverSpec {
    Omp(OmpOptions),
    Tv(TvOptions),
}

impl SolverSpec {
    pub fn kind(&self) -> SolverKind {
        match self {
            SolverSpec::Omp(_) => SolverKind::Omp,
            SolverSpec::Tv(_) => SolverKind::Tv,
        }
    }
}

/// One complete scenario, including the trial seeds to run it with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default = "default_label")]
    pub label: String,
    #[serde(default)]
    pub phantom: PhantomSpec,
    #[serde(default)]
    pub ensemble: EnsembleSpec,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub drift: DriftModel,
    pub matrix_mode: MatrixMode,
    /// Append the full-white row `1ᵀ` with value `C̄` in differential mode.
    #[serde(default = "default_true")]
    pub dc_anchor: bool,
    pub normalization: Normalization,
    pub solver: SolverSpec,
    pub trial_seeds: Vec<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_label() -> String {
    "run".into()
}

fn default_true() -> bool {
    true
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            label: default_label(),
            phantom: PhantomSpec::default(),
            ensemble: EnsembleSpec::default(),
            noise: NoiseConfig::default(),
            drift: DriftModel::default(),
            matrix_mode: MatrixMode::Differential,
            dc_anchor: true,
            normalization: Normalization::On,
            solver: SolverSpec::Tv(TvOptions::default()),
            trial_seeds: vec![1],
            output_dir: default_output_dir(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::format("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_json(&text)
    }

    pub fn n_pixels(&self) -> usize {
        self.phantom.pattern_shape().len()
    }

    /// Checks every module precondition that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::invalid(
                "pipeline",
                "version",
                format!("unsupported config version {}", self.version),
            ));
        }
        if self.trial_seeds.is_empty() {
            return Err(Error::invalid(
                "pipeline",
                "trial_seeds",
                "at least one trial seed required",
            ));
        }
        if self.label.is_empty()
            || !self
                .label
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c))
        {
            return Err(Error::invalid("pipeline", "label", "use [A-Za-z0-9_.-]+"));
        }
        let pat = self.phantom.pattern_shape();
        let rec = self.phantom.recon_shape();
        if pat.rows < rec.rows || pat.cols < rec.cols {
            return Err(Error::invalid(
                "pipeline",
                "pattern_grid",
                "smaller than the reconstruction grid",
            ));
        }
        let n = pat.len();
        if let Some(np) = self.ensemble.n_pixels {
            if np != n {
                return Err(Error::invalid(
                    "pipeline",
                    "n_pixels",
                    format!(
                        "{np} does not match the {}x{} pattern grid",
                        pat.rows, pat.cols
                    ),
                ));
            }
        }
        if !n.is_power_of_two() {
            return Err(Error::invalid(
                "sensing",
                "n_pixels",
                format!("{n} is not a power of two"),
            ));
        }
        let m = self.ensemble.m_pairs;
        if m == 0 || m > n - 1 {
            return Err(Error::invalid(
                "sensing",
                "m_pairs",
                format!("must lie in 1..={}, got {m}", n - 1),
            ));
        }
        self.noise.validate()?;
        self.drift.validate()?;
        match &self.solver {
            SolverSpec::Tv(o) => o.validate()?,
            SolverSpec::Omp(o) => {
                if !(o.residual_tol >= 0.0) {
                    return Err(Error::invalid(
                        "omp",
                        "residual_tol",
                        "must be non-negative",
                    ));
                }
            }
        }
        // geometry check without allocating the phantom twice
        scene::make_double_slit::<f64>(
            rec.rows,
            rec.cols,
            self.phantom.pitch_x_um,
            self.phantom.pitch_y_um,
            self.phantom.slit_width_um,
            self.phantom.separation_um,
            self.phantom.beta,
        )?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn omp_config_round_trips() {
        let cfg = ExperimentConfig {
            solver: SolverSpec::Omp(OmpOptions {
                max_sparsity: 300,
                residual_tol: 0.05,
            }),
            phantom: PhantomSpec {
                pattern_grid: Some([64, 128]),
                ..PhantomSpec::default()
            },
            ..ExperimentConfig::default()
        };
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn zero_measurements_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.ensemble.m_pairs = 0;
        assert_eq!(cfg.validate().unwrap_err().exit_code(), 2);
        cfg.ensemble.m_pairs = 2048;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_fields_and_versions_rejected() {
        let mut v: serde_json::Value =
            serde_json::from_str(&ExperimentConfig::default().to_json()).unwrap();
        v["version"] = 7.into();
        assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
        let mut v: serde_json::Value =
            serde_json::from_str(&ExperimentConfig::default().to_json()).unwrap();
        v["surprise"] = 1.into();
        assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn minimal_document_fills_defaults() {
        let text = r#"{
            "version": 1,
            "matrix_mode": "differential",
            "normalization": "on",
            "solver": {"kind": "omp", "max_sparsity": 400, "residual_tol": 0.05},
            "trial_seeds": [1, 2]
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.ensemble.m_pairs, 400);
        assert_eq!(cfg.noise.fullwhite_rate, 400.0);
        assert!(cfg.dc_anchor);
    }
}
