//! Gauss-Legendre quadrature, one-dimensional and tensorized over a box.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed-order product quadrature settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct QuadratureConfig {
    /// Nodes per axis.
    pub order: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { order: 32 }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order < 2 {
            return Err(Error::InvalidInput(format!(
                "quadrature order must be at least 2, got {}",
                self.order
            )));
        }
        Ok(())
    }
}

/// Nodes and weights for n-point Gauss-Legendre on [-1, 1].
///
/// Newton iteration on the Legendre polynomial, seeded with the Chebyshev
/// angle approximation; accurate to machine precision for any practical n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Initial guess for the i-th root (descending).
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n(x) and P_n'(x) by the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            dp = (n as f64) * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n == 1 {
        nodes[0] = 0.0;
        weights[0] = 2.0;
    }
    (nodes, weights)
}

/// Gauss-Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        xs.iter().map(|&x| mid + half * x).collect(),
        ws.iter().map(|&w| w * half).collect(),
    )
}

/// Integrate `f` over the box `[-r, r]^d` with an n-point rule per axis.
///
/// Evaluation order is a fixed odometer scan, so results are bit-stable.
pub fn integrate_box<F: FnMut(&[f64]) -> f64>(d: usize, r: f64, n: usize, mut f: F) -> f64 {
    let (xs, ws) = gauss_legendre_on(n, -r, r);
    let mut idx = vec![0usize; d];
    let mut point = vec![0.0; d];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for k in 0..d {
            point[k] = xs[idx[k]];
            w *= ws[idx[k]];
        }
        total += w * f(&point);
        // Odometer increment.
        let mut k = 0;
        loop {
            if k == d {
                return total;
            }
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}
