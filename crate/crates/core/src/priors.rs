//! Nonparametric priors over models.
//!
//! Drift: independent Gaussian coefficients on the sine basis of the core
//! box, `a_j ~ N(0, lambda_j^{-s})` where `lambda_j` is the basis eigenvalue,
//! truncated at a per-axis frequency cap. Smooth draws come from eigenvalue
//! decay; the tail slope `k` is a fixed prior parameter, not sampled.
//!
//! Jump measure: a stick-breaking mixture. Stick fractions are Beta(1, zeta),
//! kernel centers are uniform over the box, precisions are log-normal and the
//! overall intensity is Gamma. The stick sequence is cut at a fixed truncation
//! level and the last weight absorbs the remaining mass, so weights sum to one
//! exactly and the truncation error budget is controlled by `mass_tol`.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, LogNormal, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::{
    eigenvalue, multi_indices, CoeffEntry, DomainSpec, DriftSpec, JumpDiffusionModel, LevyAtom,
    LevyMixture,
};
use crate::rng::{channel, derive_rng};

const LN_2PI: f64 = 1.8378770664093453;

/// Gaussian sine-series prior on drift fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPriorConfig {
    pub domain: DomainSpec,
    /// Regularity exponent; coefficient variance is `lambda_j^{-s}`.
    pub s: f64,
    /// Per-axis frequency cap of the truncated series.
    pub j_max: u32,
    /// Tail slope, shared by every draw.
    pub k: f64,
}

impl GaussianPriorConfig {
    pub fn new(domain: DomainSpec, s: f64, j_max: u32, k: f64) -> Result<Self> {
        if !(s.is_finite() && s > domain.d as f64 + 2.0) {
            return Err(Error::InvalidParameter(format!(
                "regularity must exceed d + 2 = {}, got {s}",
                domain.d + 2
            )));
        }
        if j_max == 0 {
            return Err(Error::InvalidParameter("frequency cap must be at least 1".into()));
        }
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidParameter(format!("tail slope must be positive, got {k}")));
        }
        Ok(GaussianPriorConfig { domain, s, j_max, k })
    }

    /// Prior standard deviation of each component of `a_j`.
    pub fn coeff_sd(&self, j: &[u32]) -> f64 {
        eigenvalue(&self.domain, j).powf(-0.5 * self.s)
    }
}

/// Draw a drift field. Coefficients are generated index by index in the
/// canonical lexicographic order, components innermost, so the draw is a
/// fixed function of the seed.
pub fn sample_drift_prior(cfg: &GaussianPriorConfig, seed: u64) -> Result<DriftSpec> {
    let mut rng = derive_rng(seed, &[channel::PRIOR_DRIFT]);
    let d = cfg.domain.d;
    let mut coeffs = Vec::new();
    for j in multi_indices(d, cfg.j_max) {
        let sd = cfg.coeff_sd(&j);
        let a: Vec<f64> = (0..d)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut rng);
                sd * g
            })
            .collect();
        coeffs.push(CoeffEntry { j, a });
    }
    DriftSpec::new(cfg.domain, cfg.s, cfg.k, coeffs)
}

/// Log prior density of a drift field under the truncated Gaussian series.
///
/// The density lives on the dense coefficient vector up to the cap; indices
/// `spec` omits count as zero. A field outside the prior's support (indices
/// beyond the cap, or a different `s` or `k`) has density zero.
pub fn drift_prior_logdensity(cfg: &GaussianPriorConfig, spec: &DriftSpec) -> Result<f64> {
    if spec.domain != cfg.domain {
        return Err(Error::InvalidInput("drift domain does not match the prior".into()));
    }
    if spec.s != cfg.s || spec.k != cfg.k {
        return Ok(f64::NEG_INFINITY);
    }
    let dense = match spec.dense_coeffs(cfg.j_max) {
        Ok(v) => v,
        Err(_) => return Ok(f64::NEG_INFINITY),
    };
    let d = cfg.domain.d;
    let mut logp = 0.0;
    for (pos, j) in multi_indices(d, cfg.j_max).iter().enumerate() {
        let sd = cfg.coeff_sd(j);
        for c in 0..d {
            let a = dense[pos * d + c];
            logp += -0.5 * LN_2PI - sd.ln() - 0.5 * (a / sd).powi(2);
        }
    }
    Ok(logp)
}

/// Stick-breaking mixture prior on jump intensity measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpMixConfig {
    pub domain: DomainSpec,
    /// Stick concentration; stick fractions are Beta(1, concentration).
    pub concentration: f64,
    /// Log-normal precision hyperparameters.
    pub tau_log_mean: f64,
    pub tau_log_sd: f64,
    /// Gamma intensity hyperparameters (shape, rate).
    pub intensity_shape: f64,
    pub intensity_rate: f64,
    /// Truncation mass budget; also stored on sampled mixtures.
    pub mass_tol: f64,
    /// Optional fixed truncation level; default derives from `mass_tol`.
    pub atoms: Option<usize>,
}

impl DpMixConfig {
    pub fn new(domain: DomainSpec, concentration: f64) -> Self {
        DpMixConfig {
            domain,
            concentration,
            tau_log_mean: 0.0,
            tau_log_sd: 0.5,
            intensity_shape: 2.0,
            intensity_rate: 2.0,
            mass_tol: 0.01,
            atoms: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("concentration", self.concentration),
            ("tau_log_sd", self.tau_log_sd),
            ("intensity_shape", self.intensity_shape),
            ("intensity_rate", self.intensity_rate),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.tau_log_mean.is_finite() {
            return Err(Error::InvalidParameter("tau_log_mean must be finite".into()));
        }
        if !(self.mass_tol > 0.0 && self.mass_tol < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "mass tolerance must lie in (0, 0.5), got {}",
                self.mass_tol
            )));
        }
        if self.atoms == Some(0) {
            return Err(Error::InvalidParameter("need at least one atom".into()));
        }
        Ok(())
    }

    /// Truncation level: the smallest `m` with expected leftover stick mass
    /// `(zeta / (1 + zeta))^m <= mass_tol`, unless overridden.
    pub fn effective_atoms(&self) -> usize {
        if let Some(m) = self.atoms {
            return m;
        }
        let z = self.concentration;
        let per = z / (1.0 + z);
        ((self.mass_tol.ln() / per.ln()).ceil() as usize).max(1)
    }
}

/// Draw a jump mixture: intensity, then per atom the stick fraction (all but
/// the last atom), the center and the precision, in that fixed order.
pub fn sample_levy_prior(cfg: &DpMixConfig, seed: u64) -> Result<LevyMixture> {
    cfg.validate()?;
    let mut rng = derive_rng(seed, &[channel::PRIOR_LEVY]);
    let d = cfg.domain.d;
    let r = cfg.domain.r;
    let m = cfg.effective_atoms();

    let gamma = Gamma::new(cfg.intensity_shape, 1.0 / cfg.intensity_rate)
        .map_err(|e| Error::InvalidParameter(format!("intensity hyperparameters: {e}")))?;
    let intensity = gamma.sample(&mut rng);
    let beta = Beta::new(1.0, cfg.concentration)
        .map_err(|e| Error::InvalidParameter(format!("stick hyperparameters: {e}")))?;
    let lognormal = LogNormal::new(cfg.tau_log_mean, cfg.tau_log_sd)
        .map_err(|e| Error::InvalidParameter(format!("precision hyperparameters: {e}")))?;

    let mut atoms = Vec::with_capacity(m);
    let mut remaining = 1.0;
    for i in 0..m {
        let weight = if i + 1 == m {
            remaining
        } else {
            let v: f64 = beta.sample(&mut rng);
            let w = v * remaining;
            remaining -= w;
            w
        };
        let center: Vec<f64> = (0..d).map(|_| rng.random_range(-r..r)).collect();
        let tau = lognormal.sample(&mut rng);
        atoms.push(LevyAtom::new(&cfg.domain, weight.max(f64::MIN_POSITIVE), center, tau)?);
    }
    LevyMixture::new(cfg.domain, intensity, atoms, cfg.mass_tol)
}

/// Recover stick fractions from folded mixture weights. Errors when the
/// weights are not a stick sequence with the last weight absorbing the
/// remainder.
pub(crate) fn recover_sticks(weights: &[f64]) -> Result<Vec<f64>> {
    let m = weights.len();
    let mut sticks = Vec::with_capacity(m.saturating_sub(1));
    let mut remaining = 1.0;
    for (i, &w) in weights.iter().enumerate().take(m - 1) {
        if remaining <= 0.0 {
            return Err(Error::InvalidInput(format!("stick mass exhausted at atom {i}")));
        }
        let v = w / remaining;
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::InvalidInput(format!(
                "weight {w} at atom {i} is not a valid stick fraction of {remaining}"
            )));
        }
        sticks.push(v);
        remaining -= w;
    }
    if (weights[m - 1] - remaining).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "last weight {} does not absorb the remaining stick mass {remaining}",
            weights[m - 1]
        )));
    }
    Ok(sticks)
}

/// Log prior density of a mixture in stick coordinates: Beta sticks for all
/// but the last atom (whose weight is determined), uniform centers, log-normal
/// precisions, Gamma intensity.
pub fn levy_prior_logdensity(cfg: &DpMixConfig, levy: &LevyMixture) -> Result<f64> {
    cfg.validate()?;
    if levy.domain != cfg.domain {
        return Err(Error::InvalidInput("mixture domain does not match the prior".into()));
    }
    let weights: Vec<f64> = levy.atoms.iter().map(|a| a.weight).collect();
    let sticks = recover_sticks(&weights)?;

    let z = cfg.concentration;
    let mut logp: f64 = sticks.iter().map(|v| z.ln() + (z - 1.0) * (1.0 - v).ln()).sum();
    let d = cfg.domain.d as f64;
    let ln_vol = d * (2.0 * cfg.domain.r).ln();
    for a in &levy.atoms {
        let t = a.tau.ln();
        logp += -ln_vol;
        logp += -t
            - cfg.tau_log_sd.ln()
            - 0.5 * LN_2PI
            - 0.5 * ((t - cfg.tau_log_mean) / cfg.tau_log_sd).powi(2);
    }
    let lam = levy.intensity;
    if lam <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let (shape, rate) = (cfg.intensity_shape, cfg.intensity_rate);
    logp += shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * lam.ln() - rate * lam;
    Ok(logp)
}

/// Joint prior over a full model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorConfig {
    pub drift: GaussianPriorConfig,
    pub levy: DpMixConfig,
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.drift.domain != self.levy.domain {
            return Err(Error::InvalidParameter(
                "drift and jump priors live on different domains".into(),
            ));
        }
        self.levy.validate()
    }
}

/// Draw a full model; drift and jump draws use separate channels of the same
/// seed.
pub fn sample_model_prior(cfg: &PriorConfig, seed: u64) -> Result<JumpDiffusionModel> {
    cfg.validate()?;
    let drift = sample_drift_prior(&cfg.drift, seed)?;
    let levy = sample_levy_prior(&cfg.levy, seed)?;
    JumpDiffusionModel::new(drift, levy)
}

/// Box-truncated Gaussian kernel density (a probability density over the
/// box), exposed directly for diagnostics.
pub fn truncated_kernel(domain: &DomainSpec, center: &[f64], tau: f64, z: &[f64]) -> Result<f64> {
    let atom = LevyAtom::new(domain, 1.0, center.to_vec(), tau)?;
    let ld = atom.log_kernel(domain, z);
    Ok(if ld.is_finite() { ld.exp() } else { 0.0 })
}
