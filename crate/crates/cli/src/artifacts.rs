//! On-disk artifact formats: CSV emission, chain summaries, and the run
//! manifest.
//!
//! Every float is written with Rust's shortest round-trip formatting, so a
//! file parses back to exactly the values that produced it and reruns with
//! the same seeds are byte-identical.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use jumpdiff::error::Result;
use jumpdiff::inference::{Chain, ContractionSummary};
use jumpdiff::priors::PriorConfig;
use jumpdiff::sim::ObservationSeries;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Write a file, creating parent directories as needed.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Observation CSV: header `t,x1,..,xd`, one row per observed state.
pub fn observations_csv(series: &ObservationSeries) -> String {
    let d = series.states.first().map_or(0, Vec::len);
    let mut out = String::from("t");
    for c in 1..=d {
        out.push_str(&format!(",x{c}"));
    }
    out.push('\n');
    for (i, state) in series.states.iter().enumerate() {
        out.push_str(&format!("{}", i as f64 * series.delta));
        for v in state {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

/// Posterior-sample CSV: one row per retained iteration with the dense drift
/// coefficients, jump intensity, per-atom mixture parameters, and the state's
/// log prior / estimated log likelihood.
pub fn samples_csv(chain: &Chain, prior: &PriorConfig) -> String {
    let d = prior.drift.domain.d;
    let n_coeffs = (prior.drift.j_max as usize).pow(d as u32) * d;
    let m = prior.levy.effective_atoms();

    let mut out = String::from("iter");
    for i in 0..n_coeffs {
        out.push_str(&format!(",coeff_{i}"));
    }
    out.push_str(",lambda");
    for i in 0..m {
        out.push_str(&format!(",w_{i},tau_{i}"));
        for c in 0..d {
            out.push_str(&format!(",z_{i}_{c}"));
        }
    }
    out.push_str(",log_prior,log_likelihood\n");

    for (it, rec) in chain.samples.iter().enumerate() {
        out.push_str(&format!("{}", chain.warmup + it));
        for v in &rec.coeffs {
            out.push_str(&format!(",{v}"));
        }
        out.push_str(&format!(",{}", rec.lambda));
        for i in 0..m {
            out.push_str(&format!(",{},{}", rec.weights[i], rec.taus[i]));
            for c in 0..d {
                out.push_str(&format!(",{}", rec.centers[i][c]));
            }
        }
        out.push_str(&format!(",{},{}\n", rec.log_prior, rec.log_likelihood));
    }
    out
}

/// Serializable view of a chain's diagnostics (the samples live in the CSV).
#[derive(Serialize)]
pub struct ChainSummaryOut {
    pub seed: u64,
    pub retained_samples: usize,
    pub warmup: usize,
    pub acceptance_drift: f64,
    pub acceptance_mixture: f64,
    pub acceptance_aux: f64,
    pub pcn_beta_final: f64,
    pub mix_step_final: f64,
    pub zero_transition_evals: usize,
}

impl ChainSummaryOut {
    pub fn new(chain: &Chain) -> Self {
        ChainSummaryOut {
            seed: chain.seed,
            retained_samples: chain.samples.len(),
            warmup: chain.warmup,
            acceptance_drift: chain.acceptance.drift,
            acceptance_mixture: chain.acceptance.mixture,
            acceptance_aux: chain.acceptance.aux,
            pcn_beta_final: chain.pcn_beta_final,
            mix_step_final: chain.mix_step_final,
            zero_transition_evals: chain.zero_transition_evals,
        }
    }
}

/// Serializable view of a posterior-distance summary.
#[derive(Serialize)]
pub struct MetricOut {
    pub n: usize,
    pub seed: u64,
    pub median: f64,
    pub mean: f64,
    pub median_se: f64,
    pub draws: usize,
    pub distances: Vec<f64>,
}

impl MetricOut {
    pub fn new(n: usize, seed: u64, summary: &ContractionSummary) -> Self {
        MetricOut {
            n,
            seed,
            median: summary.median,
            mean: summary.mean,
            median_se: summary.median_se,
            draws: summary.draws,
            distances: summary.distances.clone(),
        }
    }
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(jumpdiff::Error::from)?;
    s.push('\n');
    Ok(s)
}

/// Index of a completed run: the configuration hash, the seeds used, crate
/// versions, and every file the run produced with its content hash. Written
/// last, so its presence marks a complete run.
#[derive(Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_sha256: String,
    pub seeds: Vec<u64>,
    pub versions: Versions,
    pub files: Vec<FileEntry>,
}

#[derive(Serialize)]
pub struct Versions {
    pub jumpdiff: &'static str,
    pub jumpdiff_cli: &'static str,
}

impl Versions {
    pub fn current() -> Self {
        Versions { jumpdiff: jumpdiff::VERSION, jumpdiff_cli: env!("CARGO_PKG_VERSION") }
    }
}

#[derive(Serialize)]
pub struct FileEntry {
    /// Path relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
}

/// Accumulates artifacts as a run writes them, then emits the manifest.
pub struct RunDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl RunDir {
    pub fn new(root: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&root)?;
        Ok(RunDir { root, files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Write one artifact and record it for the manifest.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(name);
        write_file(&path, bytes)?;
        self.files.push(FileEntry { path: name.to_string(), sha256: sha256_hex(bytes) });
        Ok(path)
    }

    /// Record files written by a parallel worker (see `Manifest` ordering).
    pub fn absorb(&mut self, entries: Vec<FileEntry>) {
        self.files.extend(entries);
    }

    /// Write `manifest.json` listing everything recorded so far, sorted by
    /// path so the bytes do not depend on write order.
    pub fn finish(mut self, command: &str, config_sha256: String, seeds: Vec<u64>) -> Result<PathBuf> {
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            command: command.to_string(),
            config_sha256,
            seeds,
            versions: Versions::current(),
            files: self.files,
        };
        let path = self.root.join("manifest.json");
        write_file(&path, to_pretty_json(&manifest)?.as_bytes())?;
        Ok(path)
    }
}
