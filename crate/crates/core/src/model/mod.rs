//! Model types: domain geometry, drift fields, jump measures.
//!
//! The state space is R^d with a distinguished box `D_r = [-r, r]^d` (the core
//! region). Drift fields are a sine series on the core (the Dirichlet Laplacian
//! eigenbasis of the box, so every basis function vanishes on the boundary),
//! glued through a unit-width shell to the confining tail `-k x / |x|_2`. The
//! shell coordinate is the sup-norm radius, matching the box geometry; for
//! d = 1 this is the usual absolute value. Jump intensity measures are finite
//! mixtures of Gaussian kernels truncated to the box and renormalized, scaled
//! by an overall intensity.

mod conditions;
mod generator;
mod lamperti;

pub use conditions::{
    check_conditions, check_conditions_field, check_conditions_gradient_nojump,
    check_conditions_gradient_nojump_field, ConditionOutcome, ConditionReport,
    GradientConditionReport,
};
pub use generator::apply_generator;
pub use lamperti::{
    check_lamperti, FnMatrixField, LampertiReport, MatrixField, NumericPartials,
    LAMPERTI_TOLERANCE,
};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::function::erf;

use crate::error::{Error, Result};
use crate::quad::QuadratureConfig;
use crate::vecops::{norm2, norm_inf};

pub const SHELL_WIDTH: f64 = 1.0;

/// State-space geometry: dimension and core-box radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub d: usize,
    pub r: f64,
    /// Width of the interpolation shell between the core boundary and the
    /// pure tail field. Fixed at 1.
    pub shell_width: f64,
}

impl DomainSpec {
    pub fn new(d: usize, r: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidParameter(format!("core radius must be positive, got {r}")));
        }
        Ok(DomainSpec { d, r, shell_width: SHELL_WIDTH })
    }

    /// Sup-norm radius of `x`, the radial coordinate of the core/shell/tail split.
    #[inline]
    pub fn sup_radius(&self, x: &[f64]) -> f64 {
        norm_inf(x)
    }

    /// Is `x` in the closed core box `[-r, r]^d`?
    #[inline]
    pub fn in_core(&self, x: &[f64]) -> bool {
        self.sup_radius(x) <= self.r
    }
}

/// All multi-indices `(j_1, ..., j_d)` with `1 <= j_i <= j_max`, in
/// lexicographic order. This is the canonical coefficient ordering used by
/// priors, chains and serialization.
pub fn multi_indices(d: usize, j_max: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::with_capacity((j_max as usize).pow(d as u32));
    let mut cur = vec![1u32; d];
    loop {
        out.push(cur.clone());
        let mut k = d;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if cur[k] < j_max {
                cur[k] += 1;
                break;
            }
            cur[k] = 1;
        }
    }
}

/// Dirichlet-Laplacian eigenvalue of the box `[-r, r]^d` for multi-index `j`:
/// `sum_i (j_i pi / (2r))^2`.
pub fn eigenvalue(domain: &DomainSpec, j: &[u32]) -> f64 {
    let c = std::f64::consts::PI / (2.0 * domain.r);
    j.iter().map(|&ji| (ji as f64 * c).powi(2)).sum()
}

/// Evaluate the tensor sine basis function for multi-index `j` at a core point:
/// `prod_i sin(j_i pi (x_i + r) / (2r))`.
pub fn basis(domain: &DomainSpec, j: &[u32], x: &[f64]) -> f64 {
    let r = domain.r;
    let mut p = 1.0;
    for i in 0..domain.d {
        let theta = std::f64::consts::PI * (x[i] + r) / (2.0 * r);
        p *= (j[i] as f64 * theta).sin();
    }
    p
}

/// One series coefficient: a multi-index and the per-component weights.
///
/// All drift components share the scalar basis; `a[c]` weighs this basis
/// function in component `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffEntry {
    pub j: Vec<u32>,
    pub a: Vec<f64>,
}

/// Drift field: truncated sine series on the core, confining tail outside.
///
/// * sup-radius <= r: `b_c(x) = sum_j a_j^c prod_i sin(j_i pi (x_i+r)/(2r))`
/// * sup-radius >= r+1: `b(x) = -k x / |x|_2`
/// * in between: linear interpolation in the sup-radius between 0 on the core
///   boundary and the tail value.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSpec {
    pub domain: DomainSpec,
    /// Smoothness exponent of the associated Gaussian prior; must exceed d + 2.
    pub s: f64,
    /// Tail pull strength.
    pub k: f64,
    /// Sorted, duplicate-free coefficient entries. Absent indices mean 0.
    pub coeffs: Vec<CoeffEntry>,
    jmax_axis: Vec<u32>,
}

impl DriftSpec {
    pub fn new(domain: DomainSpec, s: f64, k: f64, mut coeffs: Vec<CoeffEntry>) -> Result<Self> {
        if !(s.is_finite() && s > domain.d as f64 + 2.0) {
            return Err(Error::InvalidParameter(format!(
                "smoothness s must exceed d + 2 = {}, got {s}",
                domain.d + 2
            )));
        }
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidParameter(format!("tail strength k must be positive, got {k}")));
        }
        for e in &coeffs {
            if e.j.len() != domain.d || e.a.len() != domain.d {
                return Err(Error::InvalidParameter(format!(
                    "coefficient entry {:?} does not match dimension {}",
                    e.j, domain.d
                )));
            }
            if e.j.iter().any(|&ji| ji == 0) {
                return Err(Error::InvalidParameter("multi-index components start at 1".into()));
            }
            if e.a.iter().any(|a| !a.is_finite()) {
                return Err(Error::InvalidParameter(format!("non-finite coefficient at {:?}", e.j)));
            }
        }
        coeffs.sort_by(|p, q| p.j.cmp(&q.j));
        if coeffs.windows(2).any(|w| w[0].j == w[1].j) {
            return Err(Error::InvalidParameter("duplicate multi-index".into()));
        }
        let mut jmax_axis = vec![0u32; domain.d];
        for e in &coeffs {
            for (m, &ji) in jmax_axis.iter_mut().zip(&e.j) {
                *m = (*m).max(ji);
            }
        }
        Ok(DriftSpec { domain, s, k, coeffs, jmax_axis })
    }

    /// Zero series with the given tail.
    pub fn zero(domain: DomainSpec, s: f64, k: f64) -> Result<Self> {
        DriftSpec::new(domain, s, k, Vec::new())
    }

    /// Coefficients flattened in canonical order for a dense truncation
    /// (component-major within each lexicographic multi-index).
    pub fn dense_coeffs(&self, j_max: u32) -> Result<Vec<f64>> {
        let d = self.domain.d;
        if self.jmax_axis.iter().any(|&m| m > j_max) {
            return Err(Error::InvalidInput(format!(
                "drift holds indices beyond truncation {j_max}"
            )));
        }
        let mut out = Vec::with_capacity(d * (j_max as usize).pow(d as u32));
        let mut jmap = std::collections::BTreeMap::new();
        for e in &self.coeffs {
            jmap.insert(e.j.clone(), &e.a);
        }
        for j in multi_indices(d, j_max) {
            match jmap.get(&j) {
                Some(a) => out.extend_from_slice(a),
                None => out.extend(std::iter::repeat(0.0).take(d)),
            }
        }
        Ok(out)
    }

    pub fn from_dense_coeffs(
        domain: DomainSpec,
        s: f64,
        k: f64,
        j_max: u32,
        flat: &[f64],
    ) -> Result<Self> {
        let d = domain.d;
        let indices = multi_indices(d, j_max);
        if flat.len() != indices.len() * d {
            return Err(Error::InvalidInput(format!(
                "expected {} coefficients, got {}",
                indices.len() * d,
                flat.len()
            )));
        }
        let coeffs = indices
            .into_iter()
            .enumerate()
            .map(|(i, j)| CoeffEntry { j, a: flat[i * d..(i + 1) * d].to_vec() })
            .collect();
        DriftSpec::new(domain, s, k, coeffs)
    }
}

/// Evaluate the sine table `sin(j theta)` for `j = 1..=jmax` by the Chebyshev
/// recurrence `sin((j+1)t) = 2 cos(t) sin(jt) - sin((j-1)t)`.
#[inline]
fn sin_table(theta: f64, jmax: u32, out: &mut Vec<f64>) {
    out.clear();
    let (s1, c1) = theta.sin_cos();
    let twoc = 2.0 * c1;
    let mut prev = 0.0;
    let mut cur = s1;
    for _ in 0..jmax {
        out.push(cur);
        let next = twoc * cur - prev;
        prev = cur;
        cur = next;
    }
}

/// A drift vector field on R^d. Object-safe so synthetic fields can be fed to
/// the same checkers and simulators as `DriftSpec`.
pub trait DriftField: Sync {
    fn dim(&self) -> usize;
    fn eval_into(&self, x: &[f64], out: &mut [f64]);

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x, &mut out);
        out
    }

    /// Row-major Jacobian `J[i*d + j] = d b_i / d x_j`; central differences by
    /// default with step `1e-5 * max(1, |x|_2)`.
    fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let h = 1e-5 * norm2(x).max(1.0);
        let mut jac = vec![0.0; d * d];
        let mut xp = x.to_vec();
        let mut bp = vec![0.0; d];
        let mut bm = vec![0.0; d];
        for j in 0..d {
            xp[j] = x[j] + h;
            self.eval_into(&xp, &mut bp);
            xp[j] = x[j] - h;
            self.eval_into(&xp, &mut bm);
            xp[j] = x[j];
            for i in 0..d {
                jac[i * d + j] = (bp[i] - bm[i]) / (2.0 * h);
            }
        }
        jac
    }
}

impl DriftField for DriftSpec {
    fn dim(&self) -> usize {
        self.domain.d
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.domain.d;
        let r = self.domain.r;
        let rho = norm_inf(x);
        if rho <= r {
            if d == 1 {
                // Allocation-free fast path for the simulation hot loop.
                let theta = std::f64::consts::PI * (x[0] + r) / (2.0 * r);
                let (s1, c1) = theta.sin_cos();
                let twoc = 2.0 * c1;
                let (mut prev, mut cur) = (0.0, s1);
                let mut acc = 0.0;
                let mut idx = 0usize;
                let mut j = 1u32;
                while idx < self.coeffs.len() {
                    let e = &self.coeffs[idx];
                    if e.j[0] == j {
                        acc += e.a[0] * cur;
                        idx += 1;
                    }
                    let next = twoc * cur - prev;
                    prev = cur;
                    cur = next;
                    j += 1;
                }
                out[0] = acc;
                return;
            }
            let mut tables: Vec<Vec<f64>> = Vec::with_capacity(d);
            for i in 0..d {
                let theta = std::f64::consts::PI * (x[i] + r) / (2.0 * r);
                let mut t = Vec::with_capacity(self.jmax_axis[i] as usize);
                sin_table(theta, self.jmax_axis[i], &mut t);
                tables.push(t);
            }
            out.fill(0.0);
            for e in &self.coeffs {
                let mut p = 1.0;
                for i in 0..d {
                    p *= tables[i][(e.j[i] - 1) as usize];
                }
                for c in 0..d {
                    out[c] += e.a[c] * p;
                }
            }
            return;
        }
        // Shell interpolation weight: 0 on the core boundary, 1 beyond r + 1.
        let w = ((rho - r) / SHELL_WIDTH).min(1.0);
        let n2 = norm2(x);
        let scale = -self.k * w / n2;
        for (o, xi) in out.iter_mut().zip(x) {
            *o = scale * xi;
        }
    }
}

/// Drift field defined by a closure writing `b(x)` into the output slice.
pub struct FnDrift<F: Fn(&[f64], &mut [f64]) + Sync> {
    pub d: usize,
    pub f: F,
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> FnDrift<F> {
    pub fn new(d: usize, f: F) -> Self {
        FnDrift { d, f }
    }
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> DriftField for FnDrift<F> {
    fn dim(&self) -> usize {
        self.d
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }
}

/// Scalar observable with derivative access, used by the generator and the
/// semigroup machinery.
pub trait ScalarField: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let h = 1e-5 * norm2(x).max(1.0);
        let mut g = vec![0.0; d];
        let mut xp = x.to_vec();
        for i in 0..d {
            xp[i] = x[i] + h;
            let fp = self.eval(&xp);
            xp[i] = x[i] - h;
            let fm = self.eval(&xp);
            xp[i] = x[i];
            g[i] = (fp - fm) / (2.0 * h);
        }
        g
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let h = 1e-4 * norm2(x).max(1.0);
        let f0 = self.eval(x);
        let mut acc = 0.0;
        let mut xp = x.to_vec();
        for i in 0..d {
            xp[i] = x[i] + h;
            let fp = self.eval(&xp);
            xp[i] = x[i] - h;
            let fm = self.eval(&xp);
            xp[i] = x[i];
            acc += (fp - 2.0 * f0 + fm) / (h * h);
        }
        acc
    }
}

/// Bounded ridge observable `tanh(alpha . x + beta)` with analytic derivatives.
#[derive(Debug, Clone)]
pub struct TanhRidge {
    pub alpha: Vec<f64>,
    pub beta: f64,
}

impl ScalarField for TanhRidge {
    fn dim(&self) -> usize {
        self.alpha.len()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (crate::vecops::dot(&self.alpha, x) + self.beta).tanh()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let t = self.eval(x);
        let sech2 = 1.0 - t * t;
        self.alpha.iter().map(|a| a * sech2).collect()
    }
    fn laplacian(&self, x: &[f64]) -> f64 {
        let t = self.eval(x);
        let sech2 = 1.0 - t * t;
        -2.0 * t * sech2 * crate::vecops::norm2_sq(&self.alpha)
    }
}

/// `|x|_2^2` with analytic derivatives.
#[derive(Debug, Clone, Copy)]
pub struct SquaredNorm {
    pub d: usize,
}

impl ScalarField for SquaredNorm {
    fn dim(&self) -> usize {
        self.d
    }
    fn eval(&self, x: &[f64]) -> f64 {
        crate::vecops::norm2_sq(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|xi| 2.0 * xi).collect()
    }
    fn laplacian(&self, _x: &[f64]) -> f64 {
        2.0 * self.d as f64
    }
}

/// Scalar observable from a closure (derivatives by finite differences).
pub struct FnScalar<F: Fn(&[f64]) -> f64 + Sync> {
    pub d: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> ScalarField for FnScalar<F> {
    fn dim(&self) -> usize {
        self.d
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// Standard normal CDF via the complementary error function.
#[inline]
pub(crate) fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erf::erfc(-x / std::f64::consts::SQRT_2)
}

const LN_2PI: f64 = 1.8378770664093453;

/// One mixture component: weight, center, precision, plus the cached log of
/// the kernel mass inside the box (per-axis Gaussian CDF product).
#[derive(Debug, Clone, PartialEq)]
pub struct LevyAtom {
    pub weight: f64,
    pub center: Vec<f64>,
    pub tau: f64,
    log_norm: f64,
}

impl LevyAtom {
    pub fn new(domain: &DomainSpec, weight: f64, center: Vec<f64>, tau: f64) -> Result<Self> {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::InvalidParameter(format!("atom weight must be positive, got {weight}")));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidParameter(format!("atom precision must be positive, got {tau}")));
        }
        if center.len() != domain.d {
            return Err(Error::InvalidParameter("atom center dimension mismatch".into()));
        }
        if center.iter().any(|c| !c.is_finite() || c.abs() > domain.r) {
            return Err(Error::InvalidParameter(format!(
                "atom center {center:?} outside the core box of radius {}",
                domain.r
            )));
        }
        let sqrt_tau = tau.sqrt();
        let mut log_norm = 0.0;
        for &c in &center {
            let hi = std_normal_cdf((domain.r - c) * sqrt_tau);
            let lo = std_normal_cdf((-domain.r - c) * sqrt_tau);
            log_norm += (hi - lo).ln();
        }
        Ok(LevyAtom { weight, center, tau, log_norm })
    }

    /// Log of the box-truncated, renormalized Gaussian kernel at `z` (a
    /// probability density in `z` over the box). `-inf` outside the box.
    pub fn log_kernel(&self, domain: &DomainSpec, z: &[f64]) -> f64 {
        if z.iter().any(|zi| zi.abs() > domain.r) {
            return f64::NEG_INFINITY;
        }
        let d = self.center.len() as f64;
        let mut q = 0.0;
        for (zi, ci) in z.iter().zip(&self.center) {
            let u = zi - ci;
            q += u * u;
        }
        0.5 * d * (self.tau.ln() - LN_2PI) - 0.5 * self.tau * q - self.log_norm
    }

    /// Mean and second moment of one coordinate of the truncated kernel
    /// (classical truncated-normal moments).
    fn coord_moments(&self, domain: &DomainSpec, i: usize) -> (f64, f64) {
        let mu = self.center[i];
        let sigma = 1.0 / self.tau.sqrt();
        let alpha = (-domain.r - mu) / sigma;
        let beta = (domain.r - mu) / sigma;
        let z = std_normal_cdf(beta) - std_normal_cdf(alpha);
        let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mean = mu + sigma * (phi(alpha) - phi(beta)) / z;
        let var = sigma * sigma
            * (1.0 + (alpha * phi(alpha) - beta * phi(beta)) / z
                - ((phi(alpha) - phi(beta)) / z).powi(2));
        (mean, var + mean * mean)
    }
}

/// Finite jump intensity measure: `nu(dz) = lambda sum_i w_i K_i(z) dz` on the
/// core box, zero outside, where each `K_i` is a truncated Gaussian kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyMixture {
    pub domain: DomainSpec,
    /// Nominal intensity; the exact total mass is `lambda * sum w_i`.
    pub intensity: f64,
    pub mass_tol: f64,
    pub atoms: Vec<LevyAtom>,
}

impl LevyMixture {
    pub fn new(
        domain: DomainSpec,
        intensity: f64,
        atoms: Vec<LevyAtom>,
        mass_tol: f64,
    ) -> Result<Self> {
        if !(intensity.is_finite() && intensity >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "intensity must be nonnegative, got {intensity}"
            )));
        }
        if !(mass_tol > 0.0 && mass_tol < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "mass tolerance must lie in (0, 0.5), got {mass_tol}"
            )));
        }
        if atoms.is_empty() {
            return Err(Error::InvalidParameter("mixture needs at least one atom".into()));
        }
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        if !(total >= 1.0 - mass_tol && total <= 1.0 + 1e-9) {
            return Err(Error::InvalidParameter(format!(
                "atom weights sum to {total}, outside [1 - {mass_tol}, 1]"
            )));
        }
        Ok(LevyMixture { domain, intensity, mass_tol, atoms })
    }

    /// Exact total mass `lambda * sum w_i` of the intensity measure. This is
    /// the Poisson event rate and the Girsanov compensator mass.
    pub fn total_mass(&self) -> f64 {
        self.intensity * self.atoms.iter().map(|a| a.weight).sum::<f64>()
    }

    /// Log intensity density at `z` (`-inf` outside the box or when the
    /// intensity is zero). Stable log-sum-exp over atoms.
    pub fn log_density(&self, z: &[f64]) -> f64 {
        if self.intensity == 0.0 {
            return f64::NEG_INFINITY;
        }
        let mut max = f64::NEG_INFINITY;
        let mut terms = Vec::with_capacity(self.atoms.len());
        for a in &self.atoms {
            let t = a.weight.ln() + a.log_kernel(&self.domain, z);
            if t > max {
                max = t;
            }
            terms.push(t);
        }
        if !max.is_finite() {
            return f64::NEG_INFINITY;
        }
        let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
        self.intensity.ln() + max + sum.ln()
    }

    /// Intensity density at `z`; integrates to `lambda * sum w_i` over the box.
    pub fn density(&self, z: &[f64]) -> f64 {
        let ld = self.log_density(z);
        if ld.is_finite() { ld.exp() } else { 0.0 }
    }

    /// `int |z|_2^2 nu(dz)` from per-axis truncated-normal moments.
    pub fn second_moment(&self) -> f64 {
        let per_atom: f64 = self
            .atoms
            .iter()
            .map(|a| {
                let m2: f64 =
                    (0..self.domain.d).map(|i| a.coord_moments(&self.domain, i).1).sum();
                a.weight * m2
            })
            .sum();
        self.intensity * per_atom
    }

    /// `int_{|z|_2 <= 1} z nu(dz)`, the small-jump mean that enters both the
    /// Euler drift (the generator convention compensates jumps inside the unit
    /// ball) and the Girsanov drift correction.
    ///
    /// In one dimension the ball-box intersection is an interval and the
    /// integral has a closed form from Gaussian partial moments. In higher
    /// dimensions the ball no longer factorizes, so each coordinate falls back
    /// to tensor quadrature with the ball indicator (one pass per coordinate;
    /// this path only runs at model construction).
    pub fn small_jump_mean(&self, quad: QuadratureConfig) -> Result<Vec<f64>> {
        let d = self.domain.d;
        if self.intensity == 0.0 {
            return Ok(vec![0.0; d]);
        }
        if d == 1 {
            let r = self.domain.r;
            let p = (-1.0f64).max(-r);
            let q = 1.0f64.min(r);
            let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
            let mut m = 0.0;
            for a in &self.atoms {
                let c = a.center[0];
                let sigma = 1.0 / a.tau.sqrt();
                let alpha = (p - c) / sigma;
                let beta = (q - c) / sigma;
                let partial = c * (std_normal_cdf(beta) - std_normal_cdf(alpha))
                    + sigma * (phi(alpha) - phi(beta));
                m += a.weight * partial / a.log_norm.exp();
            }
            return Ok(vec![self.intensity * m]);
        }
        quad.validate()?;
        let mut m = vec![0.0; d];
        for (l, ml) in m.iter_mut().enumerate() {
            *ml = crate::quad::integrate_box(d, self.domain.r, quad.order, |z| {
                if crate::vecops::norm2_sq(z) <= 1.0 { z[l] * self.density(z) } else { 0.0 }
            });
        }
        Ok(m)
    }

    /// Draw one jump vector: categorical atom choice, then per-axis inverse-CDF
    /// sampling of the box-truncated Gaussian. Consumes `1 + d` uniforms.
    pub fn sample_jump<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let total: f64 = self.atoms.iter().map(|a| a.weight).sum();
        let mut u: f64 = rng.random::<f64>() * total;
        let mut chosen = self.atoms.len() - 1;
        for (i, a) in self.atoms.iter().enumerate() {
            if u < a.weight {
                chosen = i;
                break;
            }
            u -= a.weight;
        }
        let a = &self.atoms[chosen];
        let sigma = 1.0 / a.tau.sqrt();
        let normal = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
        let mut z = Vec::with_capacity(self.domain.d);
        for i in 0..self.domain.d {
            let lo = std_normal_cdf((-self.domain.r - a.center[i]) / sigma);
            let hi = std_normal_cdf((self.domain.r - a.center[i]) / sigma);
            let v: f64 = rng.random();
            let p = (lo + v * (hi - lo)).clamp(1e-16, 1.0 - 1e-16);
            use statrs::distribution::ContinuousCDF;
            let zi = a.center[i] + sigma * normal.inverse_cdf(p);
            z.push(zi.clamp(-self.domain.r, self.domain.r));
        }
        z
    }
}

/// Evaluate the jump intensity density; zero outside the core box.
pub fn eval_levy_density(levy: &LevyMixture, z: &[f64]) -> f64 {
    levy.density(z)
}

/// A complete model: drift plus jump measure over a shared domain.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpDiffusionModel {
    pub drift: DriftSpec,
    pub levy: LevyMixture,
    /// Cached small-jump mean of `levy`; subtracted from the drift in the
    /// Euler step so the simulated process matches the generator convention.
    shift: Vec<f64>,
}

impl JumpDiffusionModel {
    pub fn new(drift: DriftSpec, levy: LevyMixture) -> Result<Self> {
        if drift.domain != levy.domain {
            return Err(Error::InvalidParameter(
                "drift and jump measure live on different domains".into(),
            ));
        }
        let shift = levy.small_jump_mean(QuadratureConfig::default())?;
        Ok(JumpDiffusionModel { drift, levy, shift })
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.drift.domain
    }

    /// `int_{|z|_2 <= 1} z nu(dz)`, precomputed at construction.
    pub fn compensator_shift(&self) -> &[f64] {
        &self.shift
    }

    /// Content hash of the canonical JSON encoding; identifies the model in
    /// simulation output headers.
    pub fn hash(&self) -> String {
        let json = self.to_json().expect("model serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ModelWire::from(self))?)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelWire::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let wire: ModelWire = serde_json::from_str(s)?;
        wire.try_into()
    }
}

// ---------------------------------------------------------------------------
// Wire formats.

#[derive(Serialize, Deserialize)]
struct DriftWire {
    d: usize,
    r: f64,
    s: f64,
    k: f64,
    coeffs: Vec<CoeffEntry>,
}

#[derive(Serialize, Deserialize)]
struct LevyAtomWire {
    w: f64,
    z: Vec<f64>,
    tau: f64,
}

#[derive(Serialize, Deserialize)]
struct LevyWire {
    lambda: f64,
    mass_tol: f64,
    atoms: Vec<LevyAtomWire>,
}

#[derive(Serialize, Deserialize)]
struct ModelWire {
    drift: DriftWire,
    levy: LevyWire,
}

impl From<&DriftSpec> for DriftWire {
    fn from(v: &DriftSpec) -> Self {
        DriftWire {
            d: v.domain.d,
            r: v.domain.r,
            s: v.s,
            k: v.k,
            coeffs: v.coeffs.clone(),
        }
    }
}

impl TryFrom<DriftWire> for DriftSpec {
    type Error = Error;
    fn try_from(w: DriftWire) -> Result<Self> {
        DriftSpec::new(DomainSpec::new(w.d, w.r)?, w.s, w.k, w.coeffs)
    }
}

impl From<&LevyMixture> for LevyWire {
    fn from(v: &LevyMixture) -> Self {
        LevyWire {
            lambda: v.intensity,
            mass_tol: v.mass_tol,
            atoms: v
                .atoms
                .iter()
                .map(|a| LevyAtomWire { w: a.weight, z: a.center.clone(), tau: a.tau })
                .collect(),
        }
    }
}

impl From<&JumpDiffusionModel> for ModelWire {
    fn from(m: &JumpDiffusionModel) -> Self {
        ModelWire { drift: (&m.drift).into(), levy: (&m.levy).into() }
    }
}

impl TryFrom<ModelWire> for JumpDiffusionModel {
    type Error = Error;
    fn try_from(w: ModelWire) -> Result<Self> {
        let drift: DriftSpec = w.drift.try_into()?;
        let levy = LevyMixture::from_wire_json(&w.levy, drift.domain)?;
        JumpDiffusionModel::new(drift, levy)
    }
}

impl DriftSpec {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&DriftWire::from(self))?)
    }
    pub fn from_json(s: &str) -> Result<Self> {
        let w: DriftWire = serde_json::from_str(s)?;
        w.try_into()
    }
}

impl LevyMixture {
    fn from_wire_json(w: &LevyWire, domain: DomainSpec) -> Result<Self> {
        let atoms = w
            .atoms
            .iter()
            .map(|a| LevyAtom::new(&domain, a.w, a.z.clone(), a.tau))
            .collect::<Result<Vec<_>>>()?;
        LevyMixture::new(domain, w.lambda, atoms, w.mass_tol)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&LevyWire::from(self))?)
    }

    /// The wire format carries no geometry; the domain comes from context
    /// (for model files, from the drift part).
    pub fn from_json(s: &str, domain: DomainSpec) -> Result<Self> {
        let w: LevyWire = serde_json::from_str(s)?;
        LevyMixture::from_wire_json(&w, domain)
    }
}
