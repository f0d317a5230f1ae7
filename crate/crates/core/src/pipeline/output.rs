use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{RunResult, SummaryRow};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct ManifestFile {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
struct ManifestRun {
    label: String,
    trial_seeds: Vec<u64>,
    wall_clock_ms: Vec<f64>,
    config_sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    files: &'a [ManifestFile],
    runs: Vec<ManifestRun>,
}

/// What a committed output directory contains.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub dir: PathBuf,
    pub files: Vec<ManifestFile>,
    pub manifest: PathBuf,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Files written into one output directory. Dropping it before
/// [`OutputSet::commit`] deletes everything it wrote.
#[derive(Debug)]
pub struct OutputSet {
    dir: PathBuf,
    created_dir: bool,
    files: Vec<ManifestFile>,
    committed: bool,
}

impl OutputSet {
    pub fn create(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            created_dir,
            files: Vec::new(),
            committed: false,
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        self.files.push(ManifestFile {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }

    /// Per-trial reconstruction (CSV, PGM, PGM scale sidecar) and raw counts.
    pub fn write_run(&mut self, run: &RunResult) -> Result<()> {
        let label = &run.config.label;
        for t in &run.trials {
            let stem = format!("{label}_t{}", t.trial_seed);
            self.write(&format!("{stem}_recon.csv"), t.recon.to_csv().as_bytes())?;
            let (pgm, sidecar) = t.recon.to_pgm();
            self.write(&format!("{stem}_recon.pgm"), pgm.as_bytes())?;
            self.write(&format!("{stem}_recon.pgm.txt"), sidecar.as_bytes())?;
            self.write(&format!("{stem}_counts.csv"), t.record.to_csv().as_bytes())?;
        }
        Ok(())
    }

    pub fn write_summary(&mut self, name: &str, runs: &[RunResult]) -> Result<()> {
        let mut csv = SummaryRow::csv_header();
        csv.push('\n');
        for row in runs.iter().flat_map(|r| &r.summary) {
            csv.push_str(&row.csv_row());
            csv.push('\n');
        }
        self.write(name, csv.as_bytes())
    }

    /// Writes `manifest.json` and keeps the files.
    pub fn commit(mut self, runs: &[RunResult]) -> Result<RunReport> {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            files: &self.files,
            runs: runs
                .iter()
                .map(|r| ManifestRun {
                    label: r.config.label.clone(),
                    trial_seeds: r.config.trial_seeds.clone(),
                    wall_clock_ms: r
                        .trials
                        .iter()
                        .map(|t| t.elapsed.as_secs_f64() * 1e3)
                        .collect(),
                    config_sha256: sha256_hex(r.config.to_json().as_bytes()),
                })
                .collect(),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        self.committed = true;
        Ok(RunReport {
            dir: self.dir.clone(),
            files: std::mem::take(&mut self.files),
            manifest: path,
        })
    }
}

impl Drop for OutputSet {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for f in &self.files {
            let _ = fs::remove_file(self.dir.join(&f.path));
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}
