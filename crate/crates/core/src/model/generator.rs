//! The integro-differential generator of the jump diffusion:
//!
//! ```text
//! G f(x) = b(x).grad f(x) + (1/2) lap f(x)
//!        + int [ f(x+z) - f(x) - 1{|z|_2 <= 1} z.grad f(x) ] nu(dz) .
//! ```
//!
//! The jump integral runs over the core box (the support of `nu`) with a
//! fixed-order Gauss-Legendre product rule. In one dimension the rule is
//! split at the small-jump cutoff `|z| = 1` so the indicator costs no
//! accuracy.

use crate::error::{Error, Result};
use crate::model::{JumpDiffusionModel, ScalarField};
use crate::quad::{gauss_legendre_on, integrate_box, QuadratureConfig};
use crate::vecops::{dot, norm2_sq};

pub fn apply_generator(
    model: &JumpDiffusionModel,
    f: &dyn ScalarField,
    x: &[f64],
    quad: QuadratureConfig,
) -> Result<f64> {
    quad.validate()?;
    let d = model.domain().d;
    if f.dim() != d || x.len() != d {
        return Err(Error::InvalidInput("observable/point dimension mismatch".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("generator point must be finite".into()));
    }

    let grad = f.gradient(x);
    let b = crate::model::DriftField::eval(&model.drift, x);
    let local = dot(&b, &grad) + 0.5 * f.laplacian(x);

    let levy = &model.levy;
    if levy.total_mass() == 0.0 {
        return Ok(local);
    }

    let r = model.domain().r;
    let fx = f.eval(x);
    let mut y = vec![0.0; d];
    let mut integrand = |z: &[f64]| {
        for i in 0..d {
            y[i] = x[i] + z[i];
        }
        let mut v = f.eval(&y) - fx;
        if norm2_sq(z) <= 1.0 {
            v -= dot(z, &grad);
        }
        v * levy.density(z)
    };

    let jump = if d == 1 && r > 1.0 {
        // Piecewise rule with breakpoints at the indicator cutoff.
        let mut total = 0.0;
        for (a, bnd) in [(-r, -1.0), (-1.0, 1.0), (1.0, r)] {
            let (xs, ws) = gauss_legendre_on(quad.order, a, bnd);
            for (zi, wi) in xs.iter().zip(&ws) {
                total += wi * integrand(std::slice::from_ref(zi));
            }
        }
        total
    } else {
        integrate_box(d, r, quad.order, &mut integrand)
    };

    Ok(local + jump)
}
