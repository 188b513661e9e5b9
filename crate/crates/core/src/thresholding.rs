//! The scalar thresholding operator: the proximity map of the smoothed
//! truncated power potential.
//!
//! `threshold(params, xi)` returns the unique minimizer of
//! `(t - xi)^2 + mu * W(t)`, which exists and is single-valued whenever
//! `mu * |a2| < 1` (the objective is then strongly convex). The map is odd,
//! strictly increasing, and Lipschitz with constant `1 / (1 - mu |a2|)`.

use crate::error::{Error, Result};
use crate::potentials::SmoothedPotential;

/// Thresholding parameters: the weight `mu` and the potential it applies to.
#[derive(Clone, Copy, Debug)]
pub struct ThresholdParams {
    mu: f64,
    pot: SmoothedPotential,
}

impl ThresholdParams {
    /// Fails unless `mu > 0` and `mu * |a2| < 1`.
    pub fn new(mu: f64, pot: SmoothedPotential) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "threshold weight mu must be positive, got {mu}"
            )));
        }
        let product = mu * pot.cubic_a2.abs();
        if !(product < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "mu * |a2| must be below 1 for a single-valued threshold, got {product}"
            )));
        }
        Ok(ThresholdParams { mu, pot })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn potential(&self) -> &SmoothedPotential {
        &self.pot
    }

    /// Lipschitz constant `1 / (1 - mu |a2|)` of the thresholding map.
    pub fn lipschitz_bound(&self) -> f64 {
        1.0 / (1.0 - self.mu * self.pot.cubic_a2.abs())
    }
}

/// `argmin_t (t - xi)^2 + mu W(t)`.
pub fn threshold(params: &ThresholdParams, xi: f64) -> f64 {
    threshold_with(&params.pot, params.mu, xi)
}

/// Componentwise threshold; equals the scalar map applied per entry.
pub fn threshold_vector(params: &ThresholdParams, xi: &[f64]) -> Vec<f64> {
    xi.iter().map(|&x| threshold(params, x)).collect()
}

/// Unvalidated scalar threshold shared with the inner solver, which checks
/// `mu * |a2| < 1` once per solve.
pub(crate) fn threshold_with(pot: &SmoothedPotential, mu: f64, xi: f64) -> f64 {
    debug_assert!(mu > 0.0 && mu * pot.cubic_a2.abs() < 1.0);
    if xi == 0.0 {
        return 0.0;
    }
    let sign = xi.signum();
    let x = xi.abs();

    let (r, eps, p) = (pot.r, pot.eps, pot.p);

    if p == 2.0 && (r - eps) * (1.0 + mu) <= r + eps {
        return sign * threshold_quadratic(r, eps, mu, x);
    }

    if p == 1.0 && x <= mu / 2.0 {
        // dead zone: the subdifferential of mu |t| at 0 absorbs 2 xi
        return 0.0;
    }

    sign * solve_stationarity(pot, mu, x)
}

/// Closed form for `p = 2`, valid when `(r - eps)(1 + mu) <= r + eps`
/// (implied by `mu |a2| < 1`):
/// below `(r - eps)(1 + mu)` the minimizer is `xi / (1 + mu)`, above
/// `r + eps` it is `xi`, and on the bridge it solves a quadratic.
fn threshold_quadratic(r: f64, eps: f64, mu: f64, x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < (r - eps) * (1.0 + mu) {
        x / (1.0 + mu)
    } else if x > r + eps {
        x
    } else {
        let q = mu / (4.0 * eps);
        let gamma_quarter = 1.0 + q * q * (2.0 * r + eps) * (2.0 * r + eps)
            + mu / (2.0 * eps) * (r + 2.0 * eps)
            - 3.0 * mu / (2.0 * eps) * x;
        (4.0 * eps / (3.0 * mu)) * (1.0 + q * (2.0 * eps + r) - gamma_quarter.max(0.0).sqrt())
    }
}

/// Bisection on the strictly increasing stationarity function
/// `phi(t) = 2 (t - x) + mu W'(t)` over `[0, x]`, to absolute width 1e-13.
fn solve_stationarity(pot: &SmoothedPotential, mu: f64, x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let phi = |t: f64| 2.0 * (t - x) + mu * pot.derivative(t);
    let mut lo = 0.0f64;
    let mut hi = x;
    if phi(hi) <= 0.0 {
        return hi;
    }
    // phi(0) = -2x < 0 for p > 1; for p = 1 the caller already handled the
    // dead zone, so phi just above 0 is mu - 2x < 0.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-13 {
            break;
        }
    }
    0.5 * (lo + hi)
}
