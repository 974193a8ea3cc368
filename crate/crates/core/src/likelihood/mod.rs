//! Measure changes between models and divergence bounds.
//!
//! Two models with unit diffusion and finite jump measures on a shared box
//! are mutually absolutely continuous on path space. The log likelihood ratio
//! over a simulated path has three parts: the Girsanov drift term against the
//! driving noise, the jump density ratio at each jump, and the intensity-mass
//! compensator over the horizon. The drifts entering the Girsanov term are
//! the Euler drifts, so the small-jump means of the two measures appear as a
//! constant correction.

mod transition;

pub use transition::{
    estimate_transition_density, estimate_transition_density_field, log_likelihood,
    log_posterior_unnorm, EstimatorConfig, ScoreBreakdown, LOG_DENSITY_FLOOR,
};

use crate::error::{Error, Result};
use crate::model::{DriftField, JumpDiffusionModel};
use crate::quad::{gauss_legendre_on, integrate_box, QuadratureConfig};
use crate::rng::{channel, derive_key};
use crate::sim::{simulate_path, PathSkeleton};
use crate::vecops::{dot, norm2, norm2_sq};

/// Density ratios are clipped to `[1/RATIO_CLIP, RATIO_CLIP]` inside the
/// divergence integral; clip events are counted, not fatal.
pub const RATIO_CLIP: f64 = 1e12;

/// Cached context for likelihood ratios of `target` against `reference`.
pub struct GirsanovKernel<'a> {
    target: &'a JumpDiffusionModel,
    reference: &'a JumpDiffusionModel,
    /// Difference of small-jump means; the constant part of the drift gap.
    correction: Vec<f64>,
    /// Intensity mass gap `Lambda_target - Lambda_reference`.
    mass_gap: f64,
}

impl<'a> GirsanovKernel<'a> {
    pub fn new(target: &'a JumpDiffusionModel, reference: &'a JumpDiffusionModel) -> Result<Self> {
        if target.domain() != reference.domain() {
            return Err(Error::InvalidInput(
                "target and reference live on different domains".into(),
            ));
        }
        let correction = target
            .compensator_shift()
            .iter()
            .zip(reference.compensator_shift())
            .map(|(t, r)| t - r)
            .collect();
        let mass_gap = target.levy.total_mass() - reference.levy.total_mass();
        Ok(GirsanovKernel { target, reference, correction, mass_gap })
    }

    /// The constant drift correction `int_{|z|<=1} z (nu_t - nu_r)(dz)`.
    pub fn drift_correction(&self) -> &[f64] {
        &self.correction
    }

    /// Log likelihood ratio of the target over the reference along a path
    /// simulated under the reference.
    ///
    /// Exactly `NEG_INFINITY` when a jump is impossible under the target;
    /// a jump impossible under the reference is an error, since the ratio is
    /// then evaluated off the reference's support.
    pub fn log_weight(&self, path: &PathSkeleton) -> Result<f64> {
        let d = path.dim();
        if d != self.target.domain().d {
            return Err(Error::InvalidInput("path dimension mismatch".into()));
        }
        let mut bt = vec![0.0; d];
        let mut br = vec![0.0; d];
        let mut g = vec![0.0; d];
        let mut acc = 0.0;
        for i in 0..path.brownian.len() {
            let x = &path.states[i];
            let h = path.times[i + 1] - path.times[i];
            self.target.drift.eval_into(x, &mut bt);
            self.reference.drift.eval_into(x, &mut br);
            for c in 0..d {
                g[c] = bt[c] - br[c] - self.correction[c];
            }
            acc += dot(&g, &path.brownian[i]) - 0.5 * norm2_sq(&g) * h;
        }
        for (_, z) in &path.jumps {
            let lr = self.reference.levy.log_density(z);
            if lr == f64::NEG_INFINITY {
                return Err(Error::SingularWeight { jump: z.clone() });
            }
            let lt = self.target.levy.log_density(z);
            if lt == f64::NEG_INFINITY {
                return Ok(f64::NEG_INFINITY);
            }
            acc += lt - lr;
        }
        acc -= self.mass_gap * path.horizon();
        Ok(acc)
    }
}

/// One-shot convenience for [`GirsanovKernel::log_weight`].
pub fn log_girsanov_weight(
    target: &JumpDiffusionModel,
    reference: &JumpDiffusionModel,
    path: &PathSkeleton,
) -> Result<f64> {
    GirsanovKernel::new(target, reference)?.log_weight(path)
}

fn weight_statistic(
    target: &JumpDiffusionModel,
    reference: &JumpDiffusionModel,
    x0: &[f64],
    horizon: f64,
    dt: f64,
    replicates: usize,
    seed: u64,
    stat: impl Fn(f64) -> f64,
) -> Result<(f64, f64)> {
    if replicates < 2 {
        return Err(Error::InvalidInput("need at least two replicates".into()));
    }
    let kernel = GirsanovKernel::new(target, reference)?;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for j in 0..replicates {
        let rep_seed = derive_key(seed, &[channel::REPLICATE, j as u64]);
        let path = simulate_path(reference, x0, horizon, dt, rep_seed)?;
        let v = stat(kernel.log_weight(&path)?);
        sum += v;
        sum_sq += v * v;
    }
    let n = replicates as f64;
    let mean = sum / n;
    let var = ((sum_sq / n) - mean * mean).max(0.0) * n / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Monte Carlo mean of `-log w` over paths simulated under the reference,
/// with standard error. Nonnegative in expectation (it estimates the path
/// divergence of the reference from the target), so a clearly negative value
/// flags an inconsistent weight implementation.
pub fn mean_neg_log_weight(
    target: &JumpDiffusionModel,
    reference: &JumpDiffusionModel,
    x0: &[f64],
    horizon: f64,
    dt: f64,
    replicates: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    weight_statistic(target, reference, x0, horizon, dt, replicates, seed, |lw| -lw)
}

/// Monte Carlo mean of the linear weight `w` over paths simulated under the
/// reference, with standard error. The weight is a likelihood ratio for the
/// simulated chain, so the mean estimates exactly 1 whenever every reference
/// path is possible under the target; a mean far from 1 flags a broken
/// weight.
pub fn mean_weight(
    target: &JumpDiffusionModel,
    reference: &JumpDiffusionModel,
    x0: &[f64],
    horizon: f64,
    dt: f64,
    replicates: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    weight_statistic(target, reference, x0, horizon, dt, replicates, seed, f64::exp)
}

/// The two pieces of the divergence bound and the clip diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlBoundTerms {
    /// `(|b0 - b|_{2,pi} + |u|_2)^2 / 2` with `u` the small-jump mean gap.
    pub drift_term: f64,
    /// `int (rho log rho - rho + 1) dnu` with `rho = dnu0/dnu`.
    pub jump_term: f64,
    pub total: f64,
    /// Quadrature nodes whose density ratio hit the clip bounds.
    pub clipped: usize,
}

/// Upper bound for the per-unit-time divergence of `truth` from `other`,
/// split into a drift part (empirical L2 gap over the supplied points, plus
/// the compensator gap) and a jump part (an f-divergence of the intensity
/// measures, by quadrature over the box).
///
/// Density ratios are evaluated in log space and clipped at `RATIO_CLIP`;
/// `clipped` counts affected nodes. A truth with jumps against an `other`
/// without any is not absolutely continuous and errors.
pub fn kl_upper_bound(
    truth: &JumpDiffusionModel,
    other: &JumpDiffusionModel,
    pi_points: &[Vec<f64>],
    quad: QuadratureConfig,
) -> Result<KlBoundTerms> {
    quad.validate()?;
    if truth.domain() != other.domain() {
        return Err(Error::InvalidInput("models live on different domains".into()));
    }
    let d = truth.domain().d;
    if pi_points.is_empty() {
        return Err(Error::InvalidInput("need at least one point for the drift norm".into()));
    }
    if pi_points.iter().any(|p| p.len() != d) {
        return Err(Error::InvalidInput("drift-norm point dimension mismatch".into()));
    }

    let mut bt = vec![0.0; d];
    let mut bo = vec![0.0; d];
    let mut sq = 0.0;
    for x in pi_points {
        truth.drift.eval_into(x, &mut bt);
        other.drift.eval_into(x, &mut bo);
        for c in 0..d {
            let diff = bt[c] - bo[c];
            sq += diff * diff;
        }
    }
    let l2 = (sq / pi_points.len() as f64).sqrt();
    let u: Vec<f64> = truth
        .compensator_shift()
        .iter()
        .zip(other.compensator_shift())
        .map(|(a, b)| a - b)
        .collect();
    let drift_term = 0.5 * (l2 + norm2(&u)).powi(2);

    let (jump_term, clipped) = jump_divergence(truth, other, quad)?;
    Ok(KlBoundTerms { drift_term, jump_term, total: drift_term + jump_term, clipped })
}

/// `int (rho log rho - rho + 1) dnu` for `rho = dnu0/dnu`, nonnegative
/// pointwise. Returns the value and the clip count.
fn jump_divergence(
    truth: &JumpDiffusionModel,
    other: &JumpDiffusionModel,
    quad: QuadratureConfig,
) -> Result<(f64, usize)> {
    let mass0 = truth.levy.total_mass();
    let mass1 = other.levy.total_mass();
    if mass0 == 0.0 && mass1 == 0.0 {
        return Ok((0.0, 0));
    }
    if mass1 == 0.0 {
        return Err(Error::SupportViolation {
            at: "truth has jumps but the comparison measure has none".into(),
        });
    }
    if mass0 == 0.0 {
        // rho = 0: the integrand collapses to the density of `other`.
        return Ok((mass1, 0));
    }

    let d = truth.domain().d;
    let r = truth.domain().r;
    let log_clip = RATIO_CLIP.ln();
    let mut clipped = 0usize;
    let mut node = |z: &[f64]| -> f64 {
        let l0 = truth.levy.log_density(z);
        let l1 = other.levy.log_density(z);
        let mut log_rho = l0 - l1;
        if log_rho.abs() > log_clip {
            clipped += 1;
            log_rho = log_rho.clamp(-log_clip, log_clip);
        }
        let rho = log_rho.exp();
        l1.exp() * (rho * log_rho - rho + 1.0)
    };
    let value = if d == 1 {
        let (xs, ws) = gauss_legendre_on(quad.order, -r, r);
        xs.iter().zip(&ws).map(|(&x, &w)| w * node(&[x])).sum()
    } else {
        integrate_box(d, r, quad.order, |z| node(z))
    };
    Ok((value.max(0.0), clipped))
}

#[cfg(test)]
mod tests;
