//! TOML configuration: schema, loading, validation, and conversion into
//! library types.
//!
//! One document describes a whole experiment; each subcommand reads only the
//! sections it needs. Unknown keys anywhere in the document are rejected so
//! typos fail fast instead of silently falling back to defaults. The schema
//! is documented field by field in `config.example.toml` next to this crate's
//! manifest.

use std::path::Path;

use serde::Deserialize;

use jumpdiff::error::{Error, Result};
use jumpdiff::inference::ContractionConfig;
use jumpdiff::inference::SamplerConfig;
use jumpdiff::likelihood::EstimatorConfig;
use jumpdiff::model::CoeffEntry;
use jumpdiff::priors::{DpMixConfig, GaussianPriorConfig, PriorConfig};
use jumpdiff::sim::{Init, SemigroupConfig};
use jumpdiff::{DomainSpec, DriftSpec, JumpDiffusionModel, LevyAtom, LevyMixture};

/// Parsed configuration document plus the raw bytes it came from (the bytes
/// feed the manifest hash and the archived copy, so runs are traceable to the
/// exact file that produced them).
pub struct LoadedConfig {
    pub doc: ConfigDoc,
    pub raw: Vec<u8>,
}

pub fn load(path: &Path) -> Result<LoadedConfig> {
    let raw = std::fs::read(path)?;
    let text = std::str::from_utf8(&raw)
        .map_err(|e| Error::Parse(format!("config {}: not valid UTF-8: {e}", path.display())))?;
    let doc: ConfigDoc = toml::from_str(text)
        .map_err(|e| Error::Parse(format!("config {}: {e}", path.display())))?;
    Ok(LoadedConfig { doc, raw })
}

/// Full document. Every section is optional at parse time; commands demand
/// the ones they use via [`require`].
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    pub domain: Option<DomainSection>,
    pub truth: Option<TruthSection>,
    pub prior: Option<PriorSection>,
    pub data: Option<DataSection>,
    pub sampler: Option<SamplerSection>,
    pub metric: Option<MetricSection>,
    pub experiment: Option<ExperimentSection>,
}

pub fn require<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T> {
    section
        .as_ref()
        .ok_or_else(|| Error::InvalidInput(format!("config is missing the [{name}] section")))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    /// State dimension.
    pub d: usize,
    /// Half-width of the core box.
    pub r: f64,
}

impl DomainSection {
    pub fn to_domain(&self) -> Result<DomainSpec> {
        DomainSpec::new(self.d, self.r)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSection {
    pub drift: DriftSection,
    pub levy: LevySection,
}

impl TruthSection {
    pub fn to_model(&self, domain: DomainSpec) -> Result<JumpDiffusionModel> {
        let drift = self.drift.to_spec(domain)?;
        let levy = self.levy.to_mixture(domain)?;
        JumpDiffusionModel::new(drift, levy)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSection {
    /// Smoothness exponent (must exceed d + 2).
    pub s: f64,
    /// Confining tail strength.
    pub k: f64,
    #[serde(default)]
    pub coeffs: Vec<CoeffSection>,
}

impl DriftSection {
    pub fn to_spec(&self, domain: DomainSpec) -> Result<DriftSpec> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| CoeffEntry { j: c.j.clone(), a: c.a.clone() })
            .collect();
        DriftSpec::new(domain, self.s, self.k, coeffs)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffSection {
    /// Sine multi-index; components start at 1.
    pub j: Vec<u32>,
    /// Coefficient vector (one entry per state component).
    pub a: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevySection {
    /// Total jump intensity.
    pub intensity: f64,
    /// Mixture-weight shortfall tolerated before weights are rejected.
    pub mass_tol: f64,
    pub atoms: Vec<AtomSection>,
}

impl LevySection {
    pub fn to_mixture(&self, domain: DomainSpec) -> Result<LevyMixture> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| LevyAtom::new(&domain, a.weight, a.center.clone(), a.tau))
            .collect::<Result<Vec<_>>>()?;
        LevyMixture::new(domain, self.intensity, atoms, self.mass_tol)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSection {
    pub weight: f64,
    pub center: Vec<f64>,
    /// Kernel precision (inverse variance).
    pub tau: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSection {
    pub drift: PriorDriftSection,
    pub levy: PriorLevySection,
}

impl PriorSection {
    pub fn to_prior(&self, domain: DomainSpec) -> Result<PriorConfig> {
        let drift = GaussianPriorConfig::new(
            domain,
            self.drift.s,
            self.drift.j_max,
            self.drift.k,
        )?;
        let mut levy = DpMixConfig::new(domain, self.levy.concentration);
        levy.tau_log_mean = self.levy.tau_log_mean;
        levy.tau_log_sd = self.levy.tau_log_sd;
        levy.intensity_shape = self.levy.intensity_shape;
        levy.intensity_rate = self.levy.intensity_rate;
        levy.mass_tol = self.levy.mass_tol;
        levy.atoms = self.levy.atoms;
        let prior = PriorConfig { drift, levy };
        prior.validate()?;
        Ok(prior)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorDriftSection {
    /// Regularity exponent; coefficient variance decays like the eigenvalue
    /// to the power -s.
    pub s: f64,
    /// Per-axis frequency cap of the series.
    pub j_max: u32,
    /// Tail slope shared by every draw.
    pub k: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorLevySection {
    /// Stick-breaking concentration.
    pub concentration: f64,
    pub tau_log_mean: f64,
    pub tau_log_sd: f64,
    pub intensity_shape: f64,
    pub intensity_rate: f64,
    /// Truncation mass budget.
    pub mass_tol: f64,
    /// Optional fixed truncation level.
    pub atoms: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// Observation spacing.
    pub delta: f64,
    /// Integration step used when generating data.
    pub dt: f64,
    /// Warm-start horizon: integrate from the origin this long before the
    /// first observation. Mutually exclusive with `x0`.
    pub burn_in: Option<f64>,
    /// Fixed initial state. Mutually exclusive with `burn_in`.
    pub x0: Option<Vec<f64>>,
}

impl DataSection {
    pub fn to_init(&self) -> Result<Init> {
        match (&self.x0, self.burn_in) {
            (Some(_), Some(_)) => Err(Error::InvalidInput(
                "set either data.x0 or data.burn_in, not both".into(),
            )),
            (Some(x0), None) => Ok(Init::Point(x0.clone())),
            (None, Some(b)) => Ok(Init::Stationary { burn_in: b }),
            (None, None) => Err(Error::InvalidInput(
                "the [data] section needs data.x0 or data.burn_in".into(),
            )),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    pub iterations: usize,
    pub warmup: usize,
    pub pcn_beta: f64,
    pub mix_step: f64,
    pub aux_refresh_prob: f64,
    pub adapt: bool,
    pub estimator: EstimatorSection,
}

impl SamplerSection {
    pub fn to_sampler(&self) -> Result<SamplerConfig> {
        let cfg = SamplerConfig {
            iterations: self.iterations,
            warmup: self.warmup,
            pcn_beta: self.pcn_beta,
            mix_step: self.mix_step,
            aux_refresh_prob: self.aux_refresh_prob,
            adapt: self.adapt,
            estimator: EstimatorConfig {
                replicates: self.estimator.replicates,
                dt: self.estimator.dt,
                bandwidth: self.estimator.bandwidth,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    /// Monte Carlo replicates per observed transition.
    pub replicates: usize,
    /// Integration step of the replicate simulations.
    pub dt: f64,
    /// Fixed kernel bandwidth; omit for the plug-in rule.
    pub bandwidth: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSection {
    /// Posterior draws scored per chain (evenly spaced over retained samples).
    pub min_draws: usize,
    /// Evaluation grid resolution per axis for the weighting measure.
    pub points_per_axis: usize,
    pub semigroup: SemigroupSection,
}

impl MetricSection {
    pub fn to_metric(&self) -> ContractionConfig {
        ContractionConfig {
            min_draws: self.min_draws,
            points_per_axis: self.points_per_axis,
            semigroup: SemigroupConfig {
                horizon: self.semigroup.horizon,
                dt: self.semigroup.dt,
                replicates: self.semigroup.replicates,
            },
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemigroupSection {
    pub horizon: f64,
    pub dt: f64,
    pub replicates: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    /// Sample sizes, strictly increasing; larger sizes extend the smaller
    /// ones along the same trajectory.
    pub n_schedule: Vec<usize>,
    /// Repetition labels; each gets its own data and chain seeds.
    pub seeds: Vec<u64>,
    pub data_seed_base: u64,
    pub chain_seed_base: u64,
    pub metric_seed: u64,
    /// Neighborhood radii for the posterior-mass table (may be empty).
    #[serde(default)]
    pub epsilons: Vec<f64>,
    /// Default output directory; the --out flag overrides it.
    pub output_dir: Option<String>,
}

impl ExperimentSection {
    pub fn validate(&self) -> Result<()> {
        if self.n_schedule.is_empty() {
            return Err(Error::InvalidInput("experiment.n_schedule is empty".into()));
        }
        if self.n_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(format!(
                "experiment.n_schedule must be strictly increasing, got {:?}",
                self.n_schedule
            )));
        }
        if self.n_schedule.len() > 10 {
            return Err(Error::InvalidInput(
                "experiment.n_schedule supports at most 10 entries (chain seeds are \
                 spaced 10 apart per repetition)"
                    .into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidInput("experiment.seeds is empty".into()));
        }
        if self.epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::InvalidInput(
                "experiment.epsilons must all be positive and finite".into(),
            ));
        }
        Ok(())
    }

    pub fn data_seed(&self, rep: u64) -> u64 {
        self.data_seed_base.wrapping_add(rep)
    }

    pub fn chain_seed(&self, rep: u64, schedule_index: usize) -> u64 {
        self.chain_seed_base
            .wrapping_add(10 * rep)
            .wrapping_add(schedule_index as u64)
    }
}
