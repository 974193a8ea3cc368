//! Path simulation.
//!
//! The continuous part advances by the Euler scheme on a fixed base grid of
//! width `dt`; the jump part is a compound Poisson process whose event times
//! are inserted into the grid exactly, so jumps never get smeared across a
//! step. Each base step owns a derived noise stream keyed by its index, jump
//! times come from one sequential stream, and jump sizes are keyed by jump
//! ordinal. Two runs with the same seed are bit-identical, and two models
//! driven by the same seed see matched noise wherever their jump structure
//! agrees.
//!
//! A model's Euler drift is `b(x) - m` where `m` is the small-jump mean of
//! the intensity measure: the generator compensates jumps inside the unit
//! ball, so the raw drift coefficient absorbs that correction here.

mod semigroup;

pub use semigroup::{
    default_rho, default_test_fields, equicontinuity_modulus, estimate_semigroup,
    estimate_semigroup_controlled, weak_distance, weak_distance_profile, SemigroupConfig,
};

use rand_distr::{Distribution, Exp, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{DriftField, JumpDiffusionModel, LevyMixture};
use crate::rng::{channel, derive_key, derive_rng};
use crate::vecops::{all_finite, norm2};

/// States beyond this Euclidean norm abort integration as a blow-up.
pub const STATE_NORM_LIMIT: f64 = 1e8;

/// A drift field with a constant vector subtracted, used to fold the
/// small-jump compensator into the Euler drift.
pub struct ShiftedDrift<'a> {
    base: &'a dyn DriftField,
    shift: Vec<f64>,
}

impl<'a> ShiftedDrift<'a> {
    pub fn new(base: &'a dyn DriftField, shift: Vec<f64>) -> Result<Self> {
        if shift.len() != base.dim() {
            return Err(Error::InvalidInput("shift dimension mismatch".into()));
        }
        Ok(ShiftedDrift { base, shift })
    }
}

impl DriftField for ShiftedDrift<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        self.base.eval_into(x, out);
        for (o, s) in out.iter_mut().zip(&self.shift) {
            *o -= s;
        }
    }
}

/// A simulated path: grid times (base grid plus inserted jump times), states,
/// the Brownian increment over each interval, and the jump marks.
///
/// The state at `times[i + 1]` already includes any jump landing there; the
/// jump vector itself is kept separately so measure-change computations can
/// read it without differencing states.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSkeleton {
    /// Base grid width the path was generated with.
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// `brownian[i]` is the increment of the driving noise over
    /// `[times[i], times[i + 1]]`.
    pub brownian: Vec<Vec<f64>>,
    /// `(i, z)`: jump `z` applied at the end of interval `i`, in time order.
    pub jumps: Vec<(usize, Vec<f64>)>,
}

impl PathSkeleton {
    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn terminal(&self) -> &[f64] {
        self.states.last().unwrap()
    }

    pub fn num_jumps(&self) -> usize {
        self.jumps.len()
    }

    /// Re-run the Euler recursion with a different drift against the stored
    /// noise and jumps. With the drift the path was generated under, this
    /// reproduces `states` exactly.
    pub fn replay(&self, drift: &dyn DriftField) -> Result<Vec<Vec<f64>>> {
        let d = self.dim();
        if drift.dim() != d {
            return Err(Error::InvalidInput("replay drift dimension mismatch".into()));
        }
        let mut states = Vec::with_capacity(self.states.len());
        let mut x = self.states[0].clone();
        states.push(x.clone());
        let mut b = vec![0.0; d];
        let mut next_jump = 0usize;
        for i in 0..self.brownian.len() {
            let h = self.times[i + 1] - self.times[i];
            drift.eval_into(&x, &mut b);
            for c in 0..d {
                x[c] += b[c] * h + self.brownian[i][c];
            }
            while next_jump < self.jumps.len() && self.jumps[next_jump].0 == i {
                for (xc, zc) in x.iter_mut().zip(&self.jumps[next_jump].1) {
                    *xc += zc;
                }
                next_jump += 1;
            }
            if !all_finite(&x) || norm2(&x) > STATE_NORM_LIMIT {
                return Err(Error::NumericBlowup { step: i, time: self.times[i + 1] });
            }
            states.push(x.clone());
        }
        Ok(states)
    }
}

fn validate_run(d: usize, x0: &[f64], horizon: f64, dt: f64) -> Result<()> {
    if x0.len() != d {
        return Err(Error::InvalidInput(format!(
            "initial state has dimension {}, drift expects {d}",
            x0.len()
        )));
    }
    if !all_finite(x0) {
        return Err(Error::InvalidInput("initial state must be finite".into()));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidInput(format!("step size must be positive, got {dt}")));
    }
    Ok(())
}

/// Core Euler loop. `record` collects the skeleton when requested; the
/// terminal state always comes back. The noise layout (per-base-step streams,
/// sequential jump clock, per-ordinal jump sizes) does not depend on whether
/// the path is recorded.
fn euler_loop(
    drift: &dyn DriftField,
    levy: Option<&LevyMixture>,
    x0: &[f64],
    horizon: f64,
    dt: f64,
    seed: u64,
    mut record: Option<&mut PathSkeleton>,
) -> Result<Vec<f64>> {
    let d = drift.dim();
    validate_run(d, x0, horizon, dt)?;
    if let Some(l) = levy {
        if l.domain.d != d {
            return Err(Error::InvalidInput("jump measure dimension mismatch".into()));
        }
    }

    let rate = levy.map_or(0.0, |l| l.total_mass());
    let mut jump_clock = derive_rng(seed, &[channel::JUMP_TIMES]);
    let exp = if rate > 0.0 { Some(Exp::new(rate).expect("positive rate")) } else { None };
    let mut next_jump = exp.as_ref().map_or(f64::INFINITY, |e| e.sample(&mut jump_clock));
    let mut jump_ordinal: u64 = 0;

    let n_base = ((horizon / dt) - 1e-9).ceil().max(1.0) as usize;
    let mut t = 0.0;
    let mut x = x0.to_vec();
    let mut b = vec![0.0; d];
    let mut dw = vec![0.0; d];

    if let Some(rec) = record.as_deref_mut() {
        rec.dt = dt;
        rec.times.clear();
        rec.states.clear();
        rec.brownian.clear();
        rec.jumps.clear();
        rec.times.push(0.0);
        rec.states.push(x.clone());
    }

    for k in 0..n_base {
        let base_end = if k + 1 == n_base { horizon } else { (k as f64 + 1.0) * dt };
        let mut step_rng = derive_rng(seed, &[channel::BROWNIAN, k as u64]);
        loop {
            let jump_now = next_jump <= base_end;
            let seg_end = if jump_now { next_jump } else { base_end };
            let h = (seg_end - t).max(0.0);
            let sqrt_h = h.sqrt();
            for w in dw.iter_mut() {
                let g: f64 = StandardNormal.sample(&mut step_rng);
                *w = sqrt_h * g;
            }
            drift.eval_into(&x, &mut b);
            for c in 0..d {
                x[c] += b[c] * h + dw[c];
            }
            t = seg_end;
            let mut jump_vec: Option<Vec<f64>> = None;
            if jump_now {
                let mut size_rng = derive_rng(seed, &[channel::JUMP_SIZES, jump_ordinal]);
                let z = levy.unwrap().sample_jump(&mut size_rng);
                for (xc, zc) in x.iter_mut().zip(&z) {
                    *xc += zc;
                }
                jump_vec = Some(z);
                jump_ordinal += 1;
                next_jump += exp.as_ref().unwrap().sample(&mut jump_clock);
            }
            if let Some(rec) = record.as_deref_mut() {
                let interval = rec.brownian.len();
                rec.times.push(t);
                rec.brownian.push(dw.clone());
                if let Some(z) = jump_vec {
                    rec.jumps.push((interval, z));
                }
                rec.states.push(x.clone());
            }
            if !all_finite(&x) || norm2(&x) > STATE_NORM_LIMIT {
                return Err(Error::NumericBlowup { step: k, time: t });
            }
            if t >= base_end {
                break;
            }
        }
    }
    Ok(x)
}

/// Simulate a full path skeleton under the model.
pub fn simulate_path(
    model: &JumpDiffusionModel,
    x0: &[f64],
    horizon: f64,
    dt: f64,
    seed: u64,
) -> Result<PathSkeleton> {
    let drift = ShiftedDrift::new(&model.drift, model.compensator_shift().to_vec())?;
    simulate_path_field(&drift, Some(&model.levy), x0, horizon, dt, seed)
}

/// Terminal state only; same noise layout as [`simulate_path`] but without
/// storing the trajectory.
pub fn simulate_terminal(
    model: &JumpDiffusionModel,
    x0: &[f64],
    horizon: f64,
    dt: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let drift = ShiftedDrift::new(&model.drift, model.compensator_shift().to_vec())?;
    euler_loop(&drift, Some(&model.levy), x0, horizon, dt, seed, None)
}

/// Simulate with an arbitrary drift field and optional jump measure. The
/// drift is used verbatim; no compensator folding happens here.
pub fn simulate_path_field(
    drift: &dyn DriftField,
    levy: Option<&LevyMixture>,
    x0: &[f64],
    horizon: f64,
    dt: f64,
    seed: u64,
) -> Result<PathSkeleton> {
    let mut skel = PathSkeleton {
        dt,
        times: Vec::new(),
        states: Vec::new(),
        brownian: Vec::new(),
        jumps: Vec::new(),
    };
    euler_loop(drift, levy, x0, horizon, dt, seed, Some(&mut skel))?;
    Ok(skel)
}

/// Terminal-only counterpart of [`simulate_path_field`].
pub fn simulate_terminal_field(
    drift: &dyn DriftField,
    levy: Option<&LevyMixture>,
    x0: &[f64],
    horizon: f64,
    dt: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    euler_loop(drift, levy, x0, horizon, dt, seed, None)
}

/// Draw an approximate stationary state: integrate from the origin over a
/// burn-in horizon and return the endpoint. The confining tail makes the
/// process geometrically ergodic, so moderate burn-in suffices.
pub fn sample_stationary(
    model: &JumpDiffusionModel,
    burn_in: f64,
    dt: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let x0 = vec![0.0; model.domain().d];
    simulate_terminal(model, &x0, burn_in, dt, derive_key(seed, &[channel::STATIONARY]))
}

/// Initial condition for an observation run.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Point(Vec<f64>),
    /// Integrate from the origin for this long first, then start observing.
    Stationary { burn_in: f64 },
}

/// Discrete observations `X_0, X_delta, ..., X_{n delta}` of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSeries {
    pub delta: f64,
    pub states: Vec<Vec<f64>>,
}

impl ObservationSeries {
    /// Number of observed transitions (`states.len() - 1`).
    pub fn num_transitions(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    pub fn transitions(&self) -> impl Iterator<Item = (&[f64], &[f64])> {
        self.states.windows(2).map(|w| (w[0].as_slice(), w[1].as_slice()))
    }
}

/// Observe one trajectory at spacing `delta`, `n` transitions (`n + 1`
/// states). Segment `i` runs on its own derived seed, so extending a series
/// to larger `n` with the same seed only appends: the first `m + 1` states of
/// an `n`-transition series equal the `m`-transition series exactly.
pub fn sample_observations(
    model: &JumpDiffusionModel,
    init: &Init,
    n: usize,
    delta: f64,
    dt: f64,
    seed: u64,
) -> Result<ObservationSeries> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one transition".into()));
    }
    let mut x = match init {
        Init::Point(p) => {
            if p.len() != model.domain().d {
                return Err(Error::InvalidInput("initial point dimension mismatch".into()));
            }
            if !all_finite(p) {
                return Err(Error::InvalidInput("initial point must be finite".into()));
            }
            p.clone()
        }
        Init::Stationary { burn_in } => {
            sample_stationary(model, *burn_in, dt, derive_key(seed, &[channel::INIT]))?
        }
    };
    let mut states = Vec::with_capacity(n + 1);
    states.push(x.clone());
    for i in 0..n {
        let seg_seed = derive_key(seed, &[channel::SEGMENT, i as u64]);
        x = simulate_terminal(model, &x, delta, dt, seg_seed)?;
        states.push(x.clone());
    }
    Ok(ObservationSeries { delta, states })
}

#[cfg(test)]
mod tests;
