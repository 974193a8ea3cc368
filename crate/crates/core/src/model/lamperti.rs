//! Reducibility check for a state-dependent diffusion matrix.
//!
//! A diffusion field sigma admits a coordinate change to unit noise only if
//! for every x and every triple (i, j, k) with k > j
//!
//! ```text
//! sum_l  d(sigma_ik)/dx_l * sigma_lj  ==  sum_l  d(sigma_ij)/dx_l * sigma_lk .
//! ```
//!
//! The check evaluates the residual of this identity over a grid on the core
//! box. For d = 1 there is no triple with k > j, so the identity is vacuous.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::DomainSpec;
use crate::vecops::norm2;

/// A matrix-valued field with optional analytic partial derivatives.
pub trait MatrixField: Sync {
    fn dim(&self) -> usize;
    /// Row-major `d*d` entries of `sigma(x)`.
    fn eval(&self, x: &[f64]) -> Vec<f64>;
    /// `d sigma / d x_l`, row-major; central differences by default with step
    /// `1e-5 * max(1, |x|_2)`.
    fn partial(&self, x: &[f64], l: usize) -> Vec<f64> {
        let h = 1e-5 * norm2(x).max(1.0);
        let mut xp = x.to_vec();
        xp[l] = x[l] + h;
        let sp = self.eval(&xp);
        xp[l] = x[l] - h;
        let sm = self.eval(&xp);
        sp.iter().zip(&sm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
    }
}

/// Matrix field from closures; pass `None` for numeric partials.
pub struct FnMatrixField<F, G>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
    G: Fn(&[f64], usize) -> Vec<f64> + Sync,
{
    pub d: usize,
    pub f: F,
    pub partials: Option<G>,
}

/// Convenience alias when no analytic partials are supplied.
pub type NumericPartials = fn(&[f64], usize) -> Vec<f64>;

impl<F, G> MatrixField for FnMatrixField<F, G>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
    G: Fn(&[f64], usize) -> Vec<f64> + Sync,
{
    fn dim(&self) -> usize {
        self.d
    }
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }
    fn partial(&self, x: &[f64], l: usize) -> Vec<f64> {
        match &self.partials {
            Some(g) => g(x, l),
            None => {
                let h = 1e-5 * norm2(x).max(1.0);
                let mut xp = x.to_vec();
                xp[l] = x[l] + h;
                let sp = self.eval(&xp);
                xp[l] = x[l] - h;
                let sm = self.eval(&xp);
                sp.iter().zip(&sm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
            }
        }
    }
}

pub const LAMPERTI_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct LampertiReport {
    pub satisfied: bool,
    /// True when d = 1: no triple to check.
    pub vacuous: bool,
    pub max_residual: f64,
    pub worst_point: Option<Vec<f64>>,
    /// Zero-based (i, j, k) of the worst triple, k > j.
    pub worst_triple: Option<(usize, usize, usize)>,
    pub tolerance: f64,
    pub grid_resolution: usize,
}

/// Scan the commutativity residual over a `grid_resolution^d` grid on the
/// core box and report the worst triple.
pub fn check_lamperti(
    sigma: &dyn MatrixField,
    domain: &DomainSpec,
    grid_resolution: usize,
) -> Result<LampertiReport> {
    let d = sigma.dim();
    if d != domain.d {
        return Err(Error::InvalidInput(format!(
            "sigma field has dimension {d}, domain has {}",
            domain.d
        )));
    }
    if grid_resolution < 2 {
        return Err(Error::InvalidInput("grid resolution must be at least 2".into()));
    }
    if d == 1 {
        return Ok(LampertiReport {
            satisfied: true,
            vacuous: true,
            max_residual: 0.0,
            worst_point: None,
            worst_triple: None,
            tolerance: LAMPERTI_TOLERANCE,
            grid_resolution,
        });
    }

    let axis: Vec<f64> = (0..grid_resolution)
        .map(|i| -domain.r + 2.0 * domain.r * i as f64 / (grid_resolution - 1) as f64)
        .collect();
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut max_residual = 0.0f64;
    let mut worst_point = None;
    let mut worst_triple = None;
    'grid: loop {
        for a in 0..d {
            x[a] = axis[idx[a]];
        }
        let s = sigma.eval(&x);
        let partials: Vec<Vec<f64>> = (0..d).map(|l| sigma.partial(&x, l)).collect();
        for i in 0..d {
            for j in 0..d {
                for k in (j + 1)..d {
                    let mut res = 0.0;
                    for l in 0..d {
                        res += partials[l][i * d + k] * s[l * d + j]
                            - partials[l][i * d + j] * s[l * d + k];
                    }
                    if res.abs() > max_residual {
                        max_residual = res.abs();
                        worst_point = Some(x.clone());
                        worst_triple = Some((i, j, k));
                    }
                }
            }
        }
        let mut a = 0;
        loop {
            if a == d {
                break 'grid;
            }
            idx[a] += 1;
            if idx[a] < grid_resolution {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }

    Ok(LampertiReport {
        satisfied: max_residual < LAMPERTI_TOLERANCE,
        vacuous: false,
        max_residual,
        worst_point,
        worst_triple,
        tolerance: LAMPERTI_TOLERANCE,
        grid_resolution,
    })
}
