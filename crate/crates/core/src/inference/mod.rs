//! Pseudo-marginal posterior sampling.
//!
//! The chain state is the dense drift coefficient vector plus the mixture
//! parameters in unconstrained coordinates: logit stick fractions, logit
//! box-scaled centers, log precisions, log intensity. Two blocks move per
//! iteration: a preconditioned Crank-Nicolson step on the coefficients (the
//! Gaussian prior is exactly invariant, so the acceptance ratio is the
//! likelihood ratio alone) and a joint Gaussian random walk on the mixture
//! coordinates against the transformed prior density.
//!
//! The likelihood is the simulation-based estimate from the transition
//! module, driven by an auxiliary seed held in the state. Proposals reuse the
//! current seed, which correlates the two estimates and keeps the noise from
//! dominating the ratio; a low-probability third move refreshes the seed with
//! its own accept step, keeping the chain exactly pseudo-marginal.
//!
//! Without data the same machinery runs prior-only, which is how the moves
//! themselves are validated: the chain must then reproduce the prior.

mod contraction;

pub use contraction::{
    contraction_metric, ContractionConfig, ContractionCurve, ContractionSummary, CurvePoint,
};

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::likelihood::{log_likelihood, EstimatorConfig};
use crate::model::{multi_indices, DriftSpec, JumpDiffusionModel, LevyAtom, LevyMixture};
use crate::priors::{recover_sticks, DpMixConfig, PriorConfig};
use crate::rng::{channel, derive_key, derive_rng};
use crate::sim::ObservationSeries;

const LN_2PI: f64 = 1.8378770664093453;

/// Sampler block sizes and tuning knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub warmup: usize,
    /// Crank-Nicolson mixing parameter in (0, 1].
    pub pcn_beta: f64,
    /// Random-walk scale on the transformed mixture coordinates.
    pub mix_step: f64,
    /// Per-iteration probability of proposing a fresh auxiliary seed.
    pub aux_refresh_prob: f64,
    /// Adapt `pcn_beta` and `mix_step` during warmup only.
    pub adapt: bool,
    pub estimator: EstimatorConfig,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            iterations: 2000,
            warmup: 500,
            pcn_beta: 0.2,
            mix_step: 0.2,
            aux_refresh_prob: 0.05,
            adapt: true,
            estimator: EstimatorConfig { replicates: 24, dt: 0.05, bandwidth: None },
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.warmup >= self.iterations {
            return Err(Error::InvalidInput(format!(
                "need warmup < iterations, got {} / {}",
                self.warmup, self.iterations
            )));
        }
        if !(self.pcn_beta > 0.0 && self.pcn_beta <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "pcn_beta must lie in (0, 1], got {}",
                self.pcn_beta
            )));
        }
        if !(self.mix_step.is_finite() && self.mix_step > 0.0) {
            return Err(Error::InvalidInput(format!(
                "mix_step must be positive, got {}",
                self.mix_step
            )));
        }
        if !(0.0..=1.0).contains(&self.aux_refresh_prob) {
            return Err(Error::InvalidInput(format!(
                "aux_refresh_prob must lie in [0, 1], got {}",
                self.aux_refresh_prob
            )));
        }
        self.estimator.validate()
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `ln(1 + e^x)` without overflow.
#[inline]
fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// Unconstrained mixture coordinates: `[sticks (m-1) | centers (m d) |
/// log-precisions (m) | log-intensity]`.
fn mix_len(m: usize, d: usize) -> usize {
    (m - 1) + m * d + m + 1
}

fn mix_to_levy(mix: &[f64], m: usize, cfg: &DpMixConfig) -> Result<LevyMixture> {
    let d = cfg.domain.d;
    let r = cfg.domain.r;
    debug_assert_eq!(mix.len(), mix_len(m, d));
    let (sticks, rest) = mix.split_at(m - 1);
    let (xi, rest) = rest.split_at(m * d);
    let (ts, lam) = rest.split_at(m);

    let mut atoms = Vec::with_capacity(m);
    let mut remaining = 1.0;
    for i in 0..m {
        let weight = if i + 1 == m {
            remaining
        } else {
            let v = sigmoid(sticks[i]);
            let w = v * remaining;
            remaining -= w;
            w
        };
        let center: Vec<f64> =
            xi[i * d..(i + 1) * d].iter().map(|&x| r * (2.0 * sigmoid(x) - 1.0)).collect();
        atoms.push(LevyAtom::new(
            &cfg.domain,
            weight.max(f64::MIN_POSITIVE),
            center,
            ts[i].exp(),
        )?);
    }
    LevyMixture::new(cfg.domain, lam[0].exp(), atoms, cfg.mass_tol)
}

/// Transformed coordinates of an existing mixture; inverse of [`mix_to_levy`].
fn levy_to_mix(levy: &LevyMixture, m: usize, cfg: &DpMixConfig) -> Result<Vec<f64>> {
    if levy.atoms.len() != m {
        return Err(Error::InvalidInput(format!(
            "mixture has {} atoms, chain expects {m}",
            levy.atoms.len()
        )));
    }
    let weights: Vec<f64> = levy.atoms.iter().map(|a| a.weight).collect();
    let sticks = recover_sticks(&weights)?;
    let r = cfg.domain.r;
    let mut mix = Vec::with_capacity(mix_len(m, cfg.domain.d));
    mix.extend(sticks.iter().map(|&v| logit(v)));
    for a in &levy.atoms {
        for &c in &a.center {
            let p = ((c + r) / (2.0 * r)).clamp(1e-12, 1.0 - 1e-12);
            mix.push(logit(p));
        }
    }
    mix.extend(levy.atoms.iter().map(|a| a.tau.ln()));
    if !(levy.intensity > 0.0) {
        return Err(Error::InvalidInput("chain requires a positive intensity".into()));
    }
    mix.push(levy.intensity.ln());
    Ok(mix)
}

/// Log prior density of the mixture in the unconstrained coordinates
/// (natural-space density times the change-of-variable factors).
fn mix_log_prior(mix: &[f64], m: usize, cfg: &DpMixConfig) -> f64 {
    let d = cfg.domain.d;
    let (sticks, rest) = mix.split_at(m - 1);
    let (xi, rest) = rest.split_at(m * d);
    let (ts, lam) = rest.split_at(m);

    let zeta = cfg.concentration;
    let mut logp = 0.0;
    // Beta(1, zeta) stick in logit coordinates:
    // ln zeta + zeta ln(1 - v) + ln v.
    for &e in sticks {
        logp += zeta.ln() - zeta * softplus(e) - softplus(-e);
    }
    // Uniform center in logit coordinates: ln sigma(x) + ln(1 - sigma(x)).
    for &x in xi {
        logp += -softplus(x) - softplus(-x);
    }
    // Log-normal precision is Gaussian in the log coordinate.
    for &t in ts {
        logp += -cfg.tau_log_sd.ln()
            - 0.5 * LN_2PI
            - 0.5 * ((t - cfg.tau_log_mean) / cfg.tau_log_sd).powi(2);
    }
    // Gamma intensity in the log coordinate.
    let (shape, rate) = (cfg.intensity_shape, cfg.intensity_rate);
    logp += shape * rate.ln() - ln_gamma(shape) + shape * lam[0] - rate * lam[0].exp();
    logp
}

fn drift_log_prior(coeffs: &[f64], sds: &[f64]) -> f64 {
    coeffs
        .iter()
        .zip(sds)
        .map(|(a, sd)| -0.5 * LN_2PI - sd.ln() - 0.5 * (a / sd).powi(2))
        .sum()
}

/// One retained state of the chain, in natural parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    /// Dense drift coefficients in canonical order.
    pub coeffs: Vec<f64>,
    pub weights: Vec<f64>,
    pub centers: Vec<Vec<f64>>,
    pub taus: Vec<f64>,
    pub lambda: f64,
    /// Chain-coordinate log prior (drift series plus transformed mixture).
    pub log_prior: f64,
    /// Estimated log likelihood under the state's auxiliary seed; zero in
    /// prior-only runs.
    pub log_likelihood: f64,
}

impl SampleRecord {
    /// Materialize the full model this state describes.
    pub fn to_model(&self, prior: &PriorConfig) -> Result<JumpDiffusionModel> {
        let drift = DriftSpec::from_dense_coeffs(
            prior.drift.domain,
            prior.drift.s,
            prior.drift.k,
            prior.drift.j_max,
            &self.coeffs,
        )?;
        let atoms: Result<Vec<LevyAtom>> = self
            .weights
            .iter()
            .zip(&self.centers)
            .zip(&self.taus)
            .map(|((&w, c), &t)| LevyAtom::new(&prior.levy.domain, w, c.clone(), t))
            .collect();
        let levy = LevyMixture::new(prior.levy.domain, self.lambda, atoms?, prior.levy.mass_tol)?;
        JumpDiffusionModel::new(drift, levy)
    }
}

/// Post-warmup acceptance rates per block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptanceStats {
    pub drift: f64,
    pub mixture: f64,
    /// Acceptance rate of auxiliary-seed refresh proposals (1 when none were
    /// proposed or in prior-only runs).
    pub aux: f64,
}

/// Output of one sampler run.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    /// One record per post-warmup iteration.
    pub samples: Vec<SampleRecord>,
    pub acceptance: AcceptanceStats,
    pub warmup: usize,
    pub seed: u64,
    /// Tuning values in force after warmup.
    pub pcn_beta_final: f64,
    pub mix_step_final: f64,
    /// Total floored transition estimates seen across all likelihood
    /// evaluations.
    pub zero_transition_evals: usize,
}

struct BlockCounter {
    accepted: usize,
    proposed: usize,
}

impl BlockCounter {
    fn new() -> Self {
        BlockCounter { accepted: 0, proposed: 0 }
    }
    fn rate(&self) -> f64 {
        if self.proposed == 0 {
            1.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// Run the sampler. With `data` the target is the estimated posterior; without
/// it the target is the prior and the likelihood machinery is bypassed.
pub fn run_chain(
    prior: &PriorConfig,
    cfg: &SamplerConfig,
    data: Option<&ObservationSeries>,
    seed: u64,
) -> Result<Chain> {
    prior.validate()?;
    cfg.validate()?;
    if let Some(series) = data {
        if series.num_transitions() == 0 {
            return Err(Error::InvalidInput("series has no transitions".into()));
        }
    }

    let d = prior.drift.domain.d;
    let m = prior.levy.effective_atoms();
    let indices = multi_indices(d, prior.drift.j_max);
    let mut sds = Vec::with_capacity(indices.len() * d);
    for j in &indices {
        let sd = prior.drift.coeff_sd(j);
        sds.extend(std::iter::repeat(sd).take(d));
    }

    let mut rng = derive_rng(seed, &[channel::CHAIN]);

    // Initial state from the prior, on derived sub-seeds.
    let init_seed = derive_key(seed, &[channel::CHAIN, 0]);
    let init_drift = crate::priors::sample_drift_prior(&prior.drift, init_seed)?;
    let mut coeffs = init_drift.dense_coeffs(prior.drift.j_max)?;
    let init_levy = crate::priors::sample_levy_prior(&prior.levy, init_seed)?;
    let mut mix = levy_to_mix(&init_levy, m, &prior.levy)?;
    let mut mix_lp = mix_log_prior(&mix, m, &prior.levy);
    let mut aux_seed = rng.next_u64();
    let mut zero_evals = 0usize;

    let eval = |coeffs: &[f64], mix: &[f64], aux: u64, zeros: &mut usize| -> Result<f64> {
        match data {
            None => Ok(0.0),
            Some(series) => {
                let drift = DriftSpec::from_dense_coeffs(
                    prior.drift.domain,
                    prior.drift.s,
                    prior.drift.k,
                    prior.drift.j_max,
                    coeffs,
                )?;
                let levy = mix_to_levy(mix, m, &prior.levy)?;
                let model = JumpDiffusionModel::new(drift, levy)?;
                let (ll, z) = log_likelihood(&model, series, &cfg.estimator, aux)?;
                *zeros += z;
                Ok(ll)
            }
        }
    };

    let mut log_lik = eval(&coeffs, &mix, aux_seed, &mut zero_evals)?;

    let mut beta = cfg.pcn_beta;
    let mut step = cfg.mix_step;
    let mut drift_post = BlockCounter::new();
    let mut mix_post = BlockCounter::new();
    let mut aux_post = BlockCounter::new();
    let mut drift_batch = BlockCounter::new();
    let mut mix_batch = BlockCounter::new();
    const BATCH: usize = 25;

    let mut samples = Vec::with_capacity(cfg.iterations - cfg.warmup);
    let mut prop_coeffs = vec![0.0; coeffs.len()];
    let mut prop_mix = vec![0.0; mix.len()];

    for iter in 0..cfg.iterations {
        let warm = iter < cfg.warmup;

        // Drift block: preconditioned Crank-Nicolson.
        let keep = (1.0 - beta * beta).sqrt();
        for (p, (a, sd)) in prop_coeffs.iter_mut().zip(coeffs.iter().zip(&sds)) {
            let g: f64 = StandardNormal.sample(&mut rng);
            *p = keep * a + beta * sd * g;
        }
        let prop_ll = eval(&prop_coeffs, &mix, aux_seed, &mut zero_evals)?;
        let log_ratio = prop_ll - log_lik;
        let u: f64 = rng.random();
        let accept = u.ln() < log_ratio;
        if accept {
            coeffs.copy_from_slice(&prop_coeffs);
            log_lik = prop_ll;
        }
        if warm {
            drift_batch.proposed += 1;
            drift_batch.accepted += accept as usize;
        } else {
            drift_post.proposed += 1;
            drift_post.accepted += accept as usize;
        }

        // Mixture block: joint random walk in the unconstrained coordinates.
        for (p, v) in prop_mix.iter_mut().zip(&mix) {
            let g: f64 = StandardNormal.sample(&mut rng);
            *p = v + step * g;
        }
        let prop_lp = mix_log_prior(&prop_mix, m, &prior.levy);
        let prop_ll = eval(&coeffs, &prop_mix, aux_seed, &mut zero_evals)?;
        let log_ratio = (prop_lp + prop_ll) - (mix_lp + log_lik);
        let u: f64 = rng.random();
        let accept = u.ln() < log_ratio;
        if accept {
            mix.copy_from_slice(&prop_mix);
            mix_lp = prop_lp;
            log_lik = prop_ll;
        }
        if warm {
            mix_batch.proposed += 1;
            mix_batch.accepted += accept as usize;
        } else {
            mix_post.proposed += 1;
            mix_post.accepted += accept as usize;
        }

        // Auxiliary-seed refresh keeps the pseudo-marginal target exact while
        // letting the likelihood noise decorrelate over time.
        if data.is_some() && rng.random::<f64>() < cfg.aux_refresh_prob {
            let prop_aux = rng.next_u64();
            let prop_ll = eval(&coeffs, &mix, prop_aux, &mut zero_evals)?;
            let u: f64 = rng.random();
            let accept = u.ln() < prop_ll - log_lik;
            if accept {
                aux_seed = prop_aux;
                log_lik = prop_ll;
            }
            if !warm {
                aux_post.proposed += 1;
                aux_post.accepted += accept as usize;
            }
        }

        // Warmup-only scale adaptation toward standard acceptance targets.
        if warm && cfg.adapt && (iter + 1) % BATCH == 0 {
            beta = (beta * (0.4 * (drift_batch.rate() - 0.3)).exp()).clamp(1e-3, 0.999);
            step = (step * (0.4 * (mix_batch.rate() - 0.25)).exp()).clamp(1e-4, 5.0);
            drift_batch = BlockCounter::new();
            mix_batch = BlockCounter::new();
        }

        if !warm {
            let levy = mix_to_levy(&mix, m, &prior.levy)?;
            samples.push(SampleRecord {
                coeffs: coeffs.clone(),
                weights: levy.atoms.iter().map(|a| a.weight).collect(),
                centers: levy.atoms.iter().map(|a| a.center.clone()).collect(),
                taus: levy.atoms.iter().map(|a| a.tau).collect(),
                lambda: levy.intensity,
                log_prior: drift_log_prior(&coeffs, &sds) + mix_lp,
                log_likelihood: log_lik,
            });
        }
    }

    // Degeneracy check: with a likelihood in play, a frozen or free-spinning
    // block after warmup means the tuning failed.
    if data.is_some() {
        for (block, counter) in
            [("drift", &drift_post), ("mixture", &mix_post)]
        {
            if counter.proposed >= 200 {
                let rate = counter.rate();
                if !(0.005..=0.995).contains(&rate) {
                    return Err(Error::TuningFailure { block, rate });
                }
            }
        }
    }

    Ok(Chain {
        samples,
        acceptance: AcceptanceStats {
            drift: drift_post.rate(),
            mixture: mix_post.rate(),
            aux: aux_post.rate(),
        },
        warmup: cfg.warmup,
        seed,
        pcn_beta_final: beta,
        mix_step_final: step,
        zero_transition_evals: zero_evals,
    })
}
