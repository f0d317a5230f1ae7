//! Scenario orchestration: phantom → ensemble → counts → normalization →
//! solver → metrics, once per trial seed, plus the figure-grid sweeps.

mod config;
mod output;

use std::path::Path;
use std::time::{Duration, Instant};

pub use config::{
    EnsembleSpec, ExperimentConfig, Normalization, PhantomSpec, SolverSpec, CONFIG_VERSION,
};
pub use output::{OutputSet, RunReport};

use crate::error::{Error, Result};
use crate::format::{fmt_real, ratio_4dp};
use crate::linalg::Matrix;
use crate::metrics::{self, CnrReport};
use crate::normalize::{self, MeasurementVectors};
use crate::photonsim::{self, MeasurementRecord};
use crate::scene::{crop_origin, Phantom};
use crate::sensing::{build_ensemble, MatrixMode, SensingEnsemble};
use crate::solvers::{self, ReconImage, TvDiagnostics, TvOptions};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent sub-seed for one random stream of one trial.
pub fn derive_seed(base: u64, trial: u64, stream: u64) -> u64 {
    splitmix64(base ^ splitmix64(trial ^ splitmix64(stream)))
}

const STREAM_ENSEMBLE: u64 = 1;
const STREAM_DRIFT: u64 = 2;
const STREAM_SHOT: u64 = 3;

/// Everything one trial produced.
#[derive(Debug)]
pub struct TrialOutcome {
    pub trial_seed: u64,
    pub ensemble: SensingEnsemble,
    pub record: MeasurementRecord<f64>,
    pub vectors: MeasurementVectors<f64>,
    pub recon: ReconImage<f64>,
    pub tv: Option<TvDiagnostics>,
    pub cnr: Result<CnrReport>,
    pub rel_error: f64,
    pub elapsed: Duration,
}

/// Sensing matrix and measurement vector for the chosen mode. In
/// differential mode with `dc_anchor`, the full-white row is appended with
/// value `C̄`, since every `ΔA` row sums to zero and leaves the image mean
/// unobserved.
pub fn measurement_system(
    ensemble: &SensingEnsemble,
    vectors: &MeasurementVectors<f64>,
    mode: MatrixMode,
    dc_anchor: bool,
) -> (Matrix<f64>, Vec<f64>) {
    let mut a = ensemble.matrix::<f64>(mode);
    let mut y = vectors.for_mode(mode).to_vec();
    if mode == MatrixMode::Differential && dc_anchor {
        a.push_row(&vec![1.0; ensemble.n_pixels()])
            .expect("row length matches");
        y.push(vectors.c_bar);
    }
    (a, y)
}

/// Pattern-grid indices of the reconstruction crop, row-major.
fn crop_indices(cfg: &ExperimentConfig) -> Option<Vec<usize>> {
    let pat = cfg.phantom.pattern_shape();
    let rec = cfg.phantom.recon_shape();
    if pat == rec {
        return None;
    }
    let (r0, c0) = crop_origin(pat.rows, pat.cols, rec.rows, rec.cols);
    Some(
        (0..rec.rows)
            .flat_map(|i| (0..rec.cols).map(move |j| (r0 + i) * pat.cols + c0 + j))
            .collect(),
    )
}

/// Runs the full chain for one trial seed without touching the filesystem.
pub fn run_trial(cfg: &ExperimentConfig, trial_seed: u64) -> Result<TrialOutcome> {
    let start = Instant::now();
    let truth: Phantom<f64> = cfg.phantom.slit().render()?;
    let pat = cfg.phantom.pattern_shape();
    let scene_on_patterns = if pat == cfg.phantom.recon_shape() {
        truth.clone()
    } else {
        truth.padded(pat.rows, pat.cols)?
    };
    let ensemble = build_ensemble(
        pat.len(),
        cfg.ensemble.m_pairs,
        derive_seed(cfg.ensemble.seed, trial_seed, STREAM_ENSEMBLE),
    )?;
    let drift = photonsim::DriftModel {
        seed: derive_seed(cfg.drift.seed, trial_seed, STREAM_DRIFT),
        ..cfg.drift
    };
    let record = photonsim::simulate_record(
        &ensemble,
        &scene_on_patterns,
        &cfg.noise,
        &drift,
        derive_seed(0, trial_seed, STREAM_SHOT),
    )?;
    let vectors = if cfg.normalization.is_on() {
        normalize::normalize(&record)?
    } else {
        normalize::raw_vectors(&record)
    };
    let (mut a, y) = measurement_system(&ensemble, &vectors, cfg.matrix_mode, cfg.dc_anchor);
    if let Some(idx) = crop_indices(cfg) {
        a = a.select_columns(&idx);
    }
    let shape = cfg.phantom.recon_shape();
    let (recon, tv) = match &cfg.solver {
        SolverSpec::Omp(o) => (solvers::omp(&a, &y, shape, o)?, None),
        SolverSpec::Tv(o) => {
            let (img, d) = solvers::tv_admm(&a, &y, shape, o)?;
            (img, Some(d))
        }
    };
    let cnr = metrics::cnr(&recon);
    let rel_error = metrics::rel_error(&recon, &truth)?;
    Ok(TrialOutcome {
        trial_seed,
        ensemble,
        record,
        vectors,
        recon,
        tv,
        cnr,
        rel_error,
        elapsed: start.elapsed(),
    })
}

/// One summary line per trial.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub trial_seed: u64,
    pub n_pixels: usize,
    pub m_pairs: usize,
    pub sampling_ratio: String,
    pub matrix_mode: MatrixMode,
    pub normalization: Normalization,
    pub solver: solvers::SolverKind,
    pub integration_s: f64,
    pub photons_per_measurement: f64,
    pub iterations: usize,
    pub residual_norm: f64,
    pub rel_error: f64,
    pub cnr: CnrReport,
}

impl SummaryRow {
    pub fn csv_header() -> String {
        format!(
            "label,trial_seed,n_pixels,m_pairs,sampling_ratio,matrix_mode,normalization,solver,integration_s,photons_per_measurement,iterations,residual_norm,rel_error,{}",
            CnrReport::CSV_HEADER
        )
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.label,
            self.trial_seed,
            self.n_pixels,
            self.m_pairs,
            self.sampling_ratio,
            self.matrix_mode.as_str(),
            self.normalization.as_str(),
            self.solver.as_str(),
            fmt_real(self.integration_s),
            fmt_real(self.photons_per_measurement),
            self.iterations,
            fmt_real(self.residual_norm),
            fmt_real(self.rel_error),
            self.cnr.csv_row()
        )
    }
}

/// All trials of one configuration.
#[derive(Debug)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialOutcome>,
    pub summary: Vec<SummaryRow>,
}

impl RunResult {
    pub fn mean_cnr(&self) -> f64 {
        self.summary.iter().map(|r| r.cnr.cnr).sum::<f64>() / self.summary.len() as f64
    }

    pub fn mean_rel_error(&self) -> f64 {
        self.summary.iter().map(|r| r.rel_error).sum::<f64>() / self.summary.len() as f64
    }
}

/// Runs every trial seed; a degenerate metric in any trial is an error.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunResult> {
    cfg.validate()?;
    let mut trials = Vec::with_capacity(cfg.trial_seeds.len());
    let mut summary = Vec::with_capacity(cfg.trial_seeds.len());
    for &seed in &cfg.trial_seeds {
        let t = run_trial(cfg, seed)?;
        let cnr = match &t.cnr {
            Ok(c) => *c,
            Err(Error::UndefinedCnr) => return Err(Error::UndefinedCnr),
            Err(Error::DegeneratePartition { reason }) => {
                return Err(Error::DegeneratePartition {
                    reason: format!("{} trial {seed}: {reason}", cfg.label),
                })
            }
            Err(e) => return Err(Error::format("cnr", e.to_string())),
        };
        summary.push(SummaryRow {
            label: cfg.label.clone(),
            trial_seed: seed,
            n_pixels: cfg.n_pixels(),
            m_pairs: cfg.ensemble.m_pairs,
            sampling_ratio: ratio_4dp(cfg.ensemble.m_pairs, cfg.n_pixels()),
            matrix_mode: cfg.matrix_mode,
            normalization: cfg.normalization,
            solver: cfg.solver.kind(),
            integration_s: cfg.noise.integration_s,
            photons_per_measurement: cfg.noise.photons_per_measurement(),
            iterations: t.recon.iterations,
            residual_norm: t.recon.residual_norm,
            rel_error: t.rel_error,
            cnr,
        });
        trials.push(t);
    }
    Ok(RunResult {
        config: cfg.clone(),
        trials,
        summary,
    })
}

/// Executes and writes reconstructions, records, the summary table and a
/// manifest into `out_dir`. Nothing is left behind on failure.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunReport> {
    let mut out = OutputSet::create(out_dir)?;
    let result = execute(cfg)?;
    out.write_run(&result)?;
    out.write_summary("summary.csv", std::slice::from_ref(&result))?;
    out.write("config.json", cfg.to_json().as_bytes())?;
    out.commit(&[result])
}

/// Base configurations for the measurement-count grid: every matrix mode at
/// every `M`, with the base solver.
pub fn measurement_grid(base: &ExperimentConfig, ms: &[usize]) -> Vec<ExperimentConfig> {
    let mut grid = Vec::with_capacity(3 * ms.len());
    for mode in MatrixMode::ALL {
        for &m in ms {
            let mut cfg = base.clone();
            cfg.matrix_mode = mode;
            cfg.ensemble.m_pairs = m;
            cfg.label = format!("{}_{}_m{m}", base.solver.kind().as_str(), mode.as_str());
            grid.push(cfg);
        }
    }
    grid
}

pub fn sweep_measurements(base: &ExperimentConfig, ms: &[usize]) -> Result<Vec<RunResult>> {
    let grid = measurement_grid(base, ms);
    for cfg in &grid {
        cfg.validate()?;
    }
    grid.iter().map(execute).collect()
}

/// `A⁺` and `ΔA` with the TV solver at each integration interval. A base
/// configuration with an OMP solver falls back to default TV options.
pub fn photon_grid(base: &ExperimentConfig, intervals_s: &[f64]) -> Vec<ExperimentConfig> {
    let tv = match &base.solver {
        SolverSpec::Tv(o) => *o,
        SolverSpec::Omp(_) => TvOptions::default(),
    };
    let mut grid = Vec::with_capacity(2 * intervals_s.len());
    for mode in [MatrixMode::Plus, MatrixMode::Differential] {
        for &t in intervals_s {
            let mut cfg = base.clone();
            cfg.matrix_mode = mode;
            cfg.solver = SolverSpec::Tv(tv);
            cfg.noise.integration_s = t;
            let photons = cfg.noise.photons_per_measurement();
            cfg.label = format!("tv_{}_p{}", mode.as_str(), photons.round() as i64);
            grid.push(cfg);
        }
    }
    grid
}

pub fn sweep_photons(base: &ExperimentConfig, intervals_s: &[f64]) -> Result<Vec<RunResult>> {
    let grid = photon_grid(base, intervals_s);
    for cfg in &grid {
        cfg.validate()?;
    }
    grid.iter().map(execute).collect()
}

/// Executes a grid and writes it with one combined CSV.
pub fn run_grid(
    grid: &[ExperimentConfig],
    out_dir: &Path,
    combined_csv: &str,
) -> Result<RunReport> {
    let mut out = OutputSet::create(out_dir)?;
    for cfg in grid {
        cfg.validate()?;
    }
    let results = grid.iter().map(execute).collect::<Result<Vec<_>>>()?;
    for r in &results {
        out.write_run(r)?;
    }
    out.write_summary(combined_csv, &results)?;
    out.commit(&results)
}
