//! Numeric verification of the drift/jump regularity and confinement
//! constants that guarantee a well-posed, geometrically ergodic model.
//!
//! Five constants are estimated for the jump case:
//!
//! * `c1` - squared Lipschitz ratio of the drift (the jump contribution
//!   vanishes because the jump field is state-independent),
//! * `c2` - sup of the drift norm plus the second moment of the jump measure,
//! * `c3` - state-coupling of the jump field; trivially satisfied here,
//! * `c4` - radius beyond which the confinement inequality is evaluated
//!   (`r + 1` by construction),
//! * `c5` - confinement margin `inf -x.b(x)/|x|_2` beyond `c4`.
//!
//! A jump-free variant checks growth/gradient/confinement constants
//! `k1, k2, (k3, k4, beta)` instead. Sup estimates are probed on grids and
//! random point sets; an estimate that keeps growing when the grid is refined
//! or extended is reported as a violation with the witnessing point(s).

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DomainSpec, DriftField, JumpDiffusionModel, LevyMixture};
use crate::rng::{channel, derive_rng};
use crate::vecops::{dist2, dot, norm2, norm2_sq};

/// How much a sup/inf estimate may move under refinement before the quantity
/// is declared divergent.
const STABILITY_REL_TOL: f64 = 0.10;

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ConditionOutcome {
    /// Finite, refinement-stable estimate.
    Value { estimate: f64 },
    /// Holds structurally; nothing to estimate.
    Trivial { note: String },
    /// Failed, with the point(s) at which the failure was detected.
    Violation { estimate: f64, witness: Vec<Vec<f64>> },
}

impl ConditionOutcome {
    pub fn is_violation(&self) -> bool {
        matches!(self, ConditionOutcome::Violation { .. })
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            ConditionOutcome::Value { estimate } => Some(*estimate),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub c1: ConditionOutcome,
    pub c2: ConditionOutcome,
    pub c3: ConditionOutcome,
    pub c4: f64,
    pub c5: ConditionOutcome,
    pub grid_resolution: usize,
    pub probe_pairs: usize,
}

impl ConditionReport {
    pub fn no_violations(&self) -> bool {
        !(self.c1.is_violation() || self.c2.is_violation() || self.c3.is_violation()
            || self.c5.is_violation())
    }
}

fn uniform_point<R: Rng>(rng: &mut R, d: usize, half_width: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-half_width..half_width)).collect()
}

/// Max of `f` over a full grid on `[-half, half]^d`.
fn grid_max(
    d: usize,
    half: f64,
    resolution: usize,
    f: &mut dyn FnMut(&[f64]) -> f64,
) -> (f64, Vec<f64>) {
    let axis: Vec<f64> = (0..resolution)
        .map(|i| -half + 2.0 * half * i as f64 / (resolution - 1) as f64)
        .collect();
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut best = f64::NEG_INFINITY;
    let mut argmax = x.clone();
    'outer: loop {
        for a in 0..d {
            x[a] = axis[idx[a]];
        }
        let v = f(&x);
        if v > best {
            best = v;
            argmax = x.clone();
        }
        let mut a = 0;
        loop {
            if a == d {
                break 'outer;
            }
            idx[a] += 1;
            if idx[a] < resolution {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
    (best, argmax)
}

fn rel_change(lo: f64, hi: f64) -> f64 {
    (hi - lo).abs() / lo.abs().max(1e-12)
}

/// Estimate the regularity/confinement constants of a drift field paired with
/// a state-independent jump measure. `probe_pairs` random pairs feed the
/// Lipschitz ratio; grids of `grid_resolution` points per axis feed the sup
/// norms; both are re-run refined to detect divergence.
pub fn check_conditions_field(
    drift: &dyn DriftField,
    levy: &LevyMixture,
    domain: &DomainSpec,
    grid_resolution: usize,
    probe_pairs: usize,
    seed: u64,
) -> Result<ConditionReport> {
    if drift.dim() != domain.d {
        return Err(Error::InvalidInput("drift dimension does not match domain".into()));
    }
    if grid_resolution < 2 {
        return Err(Error::InvalidInput("grid resolution must be at least 2".into()));
    }
    if probe_pairs == 0 {
        return Err(Error::InvalidInput("need at least one probe pair".into()));
    }
    let d = domain.d;
    let reach = domain.r + domain.shell_width + 1.0;

    // c1: sup over random pairs of |b(x)-b(y)|^2 / |x-y|^2. The jump term of
    // the ratio is identically zero for a state-independent jump field.
    let mut rng = derive_rng(seed, &[channel::PROBE, 1]);
    let mut sup_half = 0.0f64;
    let mut sup_full = 0.0f64;
    let mut witness_pair = vec![vec![0.0; d], vec![0.0; d]];
    for p in 0..2 * probe_pairs {
        let x = uniform_point(&mut rng, d, reach);
        let mut y = uniform_point(&mut rng, d, reach);
        while dist2(&x, &y) < 1e-8 {
            y = uniform_point(&mut rng, d, reach);
        }
        let bx = drift.eval(&x);
        let by = drift.eval(&y);
        let num: f64 = bx.iter().zip(&by).map(|(p, q)| (p - q) * (p - q)).sum();
        let ratio = num / dist2(&x, &y).powi(2);
        if ratio > sup_full {
            sup_full = ratio;
            witness_pair = vec![x.clone(), y.clone()];
        }
        if p + 1 == probe_pairs {
            sup_half = sup_full;
        }
    }
    let c1 = if rel_change(sup_half, sup_full) > STABILITY_REL_TOL {
        ConditionOutcome::Violation { estimate: sup_full, witness: witness_pair }
    } else {
        ConditionOutcome::Value { estimate: sup_full }
    };

    // c2: sup |b| over a grid covering core, shell and tail, plus the second
    // moment of the jump measure.
    let moment2 = levy.second_moment();
    let (sup_b_coarse, _) = grid_max(d, reach, grid_resolution, &mut |x| norm2(&drift.eval(x)));
    let (sup_b_fine, arg_fine) =
        grid_max(d, reach, 2 * grid_resolution - 1, &mut |x| norm2(&drift.eval(x)));
    let c2 = if rel_change(sup_b_coarse, sup_b_fine) > STABILITY_REL_TOL {
        ConditionOutcome::Violation { estimate: sup_b_fine + moment2, witness: vec![arg_fine] }
    } else {
        ConditionOutcome::Value { estimate: sup_b_fine.max(sup_b_coarse) + moment2 }
    };

    let c3 = ConditionOutcome::Trivial { note: "state-independent jump measure".into() };

    // c4/c5: confinement beyond the shell. Points are sampled with sup-radius
    // in (r+1, 2(r+1)]; there the tail construction gives -x.b/|x|_2 = k.
    let c4 = domain.r + domain.shell_width;
    let mut rng5 = derive_rng(seed, &[channel::PROBE, 5]);
    let mut inf_half = f64::INFINITY;
    let mut inf_full = f64::INFINITY;
    let mut witness5 = vec![0.0; d];
    for p in 0..2 * probe_pairs {
        let mut u = uniform_point(&mut rng5, d, 1.0);
        while crate::vecops::norm_inf(&u) < 0.1 {
            u = uniform_point(&mut rng5, d, 1.0);
        }
        let sup = crate::vecops::norm_inf(&u);
        let rho = rng5.random_range(c4 * (1.0 + 1e-9)..2.0 * c4);
        let x: Vec<f64> = u.iter().map(|ui| ui / sup * rho).collect();
        let margin = -dot(&x, &drift.eval(&x)) / norm2(&x);
        if margin < inf_full {
            inf_full = margin;
            witness5 = x.clone();
        }
        if p + 1 == probe_pairs {
            inf_half = inf_full;
        }
    }
    let c5 = if inf_full <= 0.0 || rel_change(inf_full, inf_half) > STABILITY_REL_TOL {
        ConditionOutcome::Violation { estimate: inf_full, witness: vec![witness5] }
    } else {
        ConditionOutcome::Value { estimate: inf_full }
    };

    Ok(ConditionReport { c1, c2, c3, c4, c5, grid_resolution, probe_pairs })
}

/// Model-level wrapper around [`check_conditions_field`].
pub fn check_conditions(
    model: &JumpDiffusionModel,
    grid_resolution: usize,
    probe_pairs: usize,
    seed: u64,
) -> Result<ConditionReport> {
    check_conditions_field(
        &model.drift,
        &model.levy,
        model.domain(),
        grid_resolution,
        probe_pairs,
        seed,
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientConditionReport {
    /// Growth constant: sup |b(x)|^2 / (1 + |x|^2).
    pub k1: ConditionOutcome,
    /// Gradient bound: sup over entries of |d b_i / d x_j|.
    pub k2: ConditionOutcome,
    /// Confinement scale in `x.b(x) <= -k3 |x|^beta` for `|x| >= k4`.
    pub k3: ConditionOutcome,
    pub k4: f64,
    pub beta: f64,
    pub grid_resolution: usize,
    pub probe_pairs: usize,
}

impl GradientConditionReport {
    pub fn no_violations(&self) -> bool {
        !(self.k1.is_violation() || self.k2.is_violation() || self.k3.is_violation())
    }
}

/// Gradient-based condition variant for jump-free dynamics. Growth sups are
/// evaluated on `[-range, range]^d` and re-checked on the doubled range;
/// growth that does not saturate is a violation.
pub fn check_conditions_gradient_nojump_field(
    drift: &dyn DriftField,
    range: f64,
    grid_resolution: usize,
    probe_pairs: usize,
    seed: u64,
) -> Result<GradientConditionReport> {
    if grid_resolution < 2 {
        return Err(Error::InvalidInput("grid resolution must be at least 2".into()));
    }
    if probe_pairs == 0 {
        return Err(Error::InvalidInput("need at least one probe point".into()));
    }
    if !(range.is_finite() && range > 1.0) {
        return Err(Error::InvalidInput("probe range must exceed 1".into()));
    }
    let d = drift.dim();

    let mut growth = |x: &[f64]| norm2_sq(&drift.eval(x)) / (1.0 + norm2_sq(x));
    let (g1, _) = grid_max(d, range, grid_resolution, &mut growth);
    let (g2, g2_arg) = grid_max(d, 2.0 * range, grid_resolution, &mut growth);
    let k1 = if rel_change(g1, g2) > STABILITY_REL_TOL {
        ConditionOutcome::Violation { estimate: g2, witness: vec![g2_arg] }
    } else {
        ConditionOutcome::Value { estimate: g1.max(g2) }
    };

    let mut grad = |x: &[f64]| {
        drift.jacobian(x).iter().fold(0.0f64, |m, v| m.max(v.abs()))
    };
    let (j1, _) = grid_max(d, range, grid_resolution, &mut grad);
    let (j2, j2_arg) = grid_max(d, 2.0 * range, grid_resolution, &mut grad);
    let k2 = if rel_change(j1, j2) > STABILITY_REL_TOL {
        ConditionOutcome::Violation { estimate: j2, witness: vec![j2_arg] }
    } else {
        ConditionOutcome::Value { estimate: j1.max(j2) }
    };

    // Confinement: sample |x|_2 in [k4, 2*range], require x.b(x) < 0
    // everywhere, fit beta by least squares on log(-x.b) vs log |x|, then take
    // the worst multiplicative margin as k3.
    let k4 = 1.0;
    let mut rng = derive_rng(seed, &[channel::PROBE, 3]);
    let mut logs: Vec<(f64, f64)> = Vec::with_capacity(probe_pairs);
    let mut k3_violation: Option<Vec<f64>> = None;
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(probe_pairs);
    for _ in 0..probe_pairs {
        let mut x = uniform_point(&mut rng, d, 2.0 * range);
        while norm2(&x) < k4 {
            x = uniform_point(&mut rng, d, 2.0 * range);
        }
        let m = -dot(&x, &drift.eval(&x));
        if m <= 0.0 {
            if k3_violation.is_none() {
                k3_violation = Some(x.clone());
            }
        } else {
            logs.push((norm2(&x).ln(), m.ln()));
        }
        points.push(x);
    }
    let (k3, beta) = if let Some(w) = k3_violation {
        (ConditionOutcome::Violation { estimate: 0.0, witness: vec![w] }, 1.0)
    } else {
        let n = logs.len() as f64;
        let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
        let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let beta = if sxx > 0.0 { (sxy / sxx).max(1.0) } else { 1.0 };
        let mut k3v = f64::INFINITY;
        for x in &points {
            let m = -dot(x, &drift.eval(x));
            k3v = k3v.min(m / norm2(x).powf(beta));
        }
        if k3v <= 0.0 {
            (
                ConditionOutcome::Violation { estimate: k3v, witness: points },
                beta,
            )
        } else {
            (ConditionOutcome::Value { estimate: k3v }, beta)
        }
    };

    Ok(GradientConditionReport { k1, k2, k3, k4, beta, grid_resolution, probe_pairs })
}

/// Model-level wrapper; rejects models with jumps, which this variant does
/// not cover.
pub fn check_conditions_gradient_nojump(
    model: &JumpDiffusionModel,
    grid_resolution: usize,
    probe_pairs: usize,
    seed: u64,
) -> Result<GradientConditionReport> {
    if model.levy.intensity > 0.0 {
        return Err(Error::JumpsPresent { intensity: model.levy.intensity });
    }
    let range = (model.domain().r + model.domain().shell_width + 1.0).max(4.0);
    check_conditions_gradient_nojump_field(
        &model.drift,
        range,
        grid_resolution,
        probe_pairs,
        seed,
    )
}
