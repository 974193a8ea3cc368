//! Empirical posterior contraction: how far posterior draws sit from a known
//! truth in the weak (semigroup) distance, and how that distance shrinks as
//! the data grows.

use rand::Rng;

use crate::error::{Error, Result};
use crate::inference::Chain;
use crate::model::{JumpDiffusionModel, ScalarField};
use crate::priors::PriorConfig;
use crate::rng::{channel, derive_rng};
use crate::sim::{default_rho, default_test_fields, weak_distance_profile, SemigroupConfig};

/// Budget for the posterior-distance summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionConfig {
    /// Draws taken from the chain (evenly spaced over the retained samples).
    pub min_draws: usize,
    /// Evaluation grid resolution per axis for the weighting measure.
    pub points_per_axis: usize,
    pub semigroup: SemigroupConfig,
}

impl Default for ContractionConfig {
    fn default() -> Self {
        ContractionConfig {
            min_draws: 20,
            points_per_axis: 5,
            semigroup: SemigroupConfig { horizon: 0.5, dt: 0.05, replicates: 200 },
        }
    }
}

/// Distances from the truth for the thinned draws, with location summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionSummary {
    pub distances: Vec<f64>,
    pub median: f64,
    pub mean: f64,
    /// Bootstrap standard error of the median over the draws.
    pub median_se: f64,
    pub draws: usize,
}

fn median_of(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Weak distance of thinned posterior draws from the truth. All draws share
/// one seed for the distance estimates, so differences across draws reflect
/// the models, not the noise.
pub fn contraction_metric(
    chain: &Chain,
    prior: &PriorConfig,
    truth: &JumpDiffusionModel,
    cfg: &ContractionConfig,
    seed: u64,
) -> Result<ContractionSummary> {
    if chain.samples.is_empty() {
        return Err(Error::InvalidInput("chain holds no samples".into()));
    }
    if cfg.min_draws == 0 || cfg.points_per_axis == 0 {
        return Err(Error::InvalidInput("need positive draw and grid counts".into()));
    }
    cfg.semigroup.validate()?;
    let d = truth.domain().d;
    let fields = default_test_fields(d);
    let refs: Vec<&dyn ScalarField> =
        fields.iter().map(|f| f.as_ref() as &dyn ScalarField).collect();
    let (points, masses) = default_rho(truth.domain(), cfg.points_per_axis);

    let len = chain.samples.len();
    let n_draws = cfg.min_draws.min(len);
    let mut distances = Vec::with_capacity(n_draws);
    for i in 0..n_draws {
        let idx = ((i + 1) * len) / n_draws - 1;
        let model = chain.samples[idx].to_model(prior)?;
        let profile =
            weak_distance_profile(&model, truth, &refs, &points, &masses, &cfg.semigroup, seed)?;
        distances.push(profile.iter().sum::<f64>() / profile.len() as f64);
    }

    let mut sorted = distances.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = median_of(&sorted);
    let mean = distances.iter().sum::<f64>() / distances.len() as f64;

    // Bootstrap the median.
    let mut rng = derive_rng(seed, &[channel::AUX]);
    let b = 200;
    let mut medians = Vec::with_capacity(b);
    let mut resample = vec![0.0; distances.len()];
    for _ in 0..b {
        for slot in resample.iter_mut() {
            *slot = distances[rng.random_range(0..distances.len())];
        }
        resample.sort_by(|a, b| a.total_cmp(b));
        medians.push(median_of(&resample));
    }
    let bm = medians.iter().sum::<f64>() / b as f64;
    let var = medians.iter().map(|v| (v - bm).powi(2)).sum::<f64>() / (b as f64 - 1.0);

    Ok(ContractionSummary {
        distances,
        median,
        mean,
        median_se: var.sqrt(),
        draws: n_draws,
    })
}

/// One point of a contraction curve: sample size, data seed, and the median
/// posterior distance with its bootstrap error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub n: usize,
    pub seed: u64,
    pub median: f64,
    pub median_se: f64,
}

/// Median posterior distance as a function of sample size, across data seeds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContractionCurve {
    pub points: Vec<CurvePoint>,
}

impl ContractionCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,seed,median,median_se\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{},{}\n", p.n, p.seed, p.median, p.median_se));
        }
        out
    }

    pub fn write_csv<P: AsRef<std::path::Path>>(&self, path: P) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Medians grouped by seed in ascending `n`, for monotonicity checks.
    pub fn medians_by_seed(&self) -> Vec<(u64, Vec<(usize, f64)>)> {
        let mut seeds: Vec<u64> = self.points.iter().map(|p| p.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        seeds
            .into_iter()
            .map(|s| {
                let mut rows: Vec<(usize, f64)> = self
                    .points
                    .iter()
                    .filter(|p| p.seed == s)
                    .map(|p| (p.n, p.median))
                    .collect();
                rows.sort_unstable_by_key(|r| r.0);
                (s, rows)
            })
            .collect()
    }
}
