//! Truncated power potentials `W(t) = min(|t|^p, r^p)` and their C^1 cubic
//! smoothing.
//!
//! The smoothing replaces the kink at `|t| = r` by a cubic bridge over
//! `[r - eps, r + eps]` that matches value and first derivative on both
//! sides. The bridge's second-order coefficient bounds the potential's
//! curvature from below, which is what the solver's semiconvexity parameter
//! `omega` has to dominate.

use crate::error::{Error, Result};

/// `min(|t|^p, r^p)`.
pub fn truncated_power(t: f64, r: f64, p: f64) -> f64 {
    debug_assert!(r > 0.0 && p >= 1.0);
    t.abs().powf(p).min(r.powf(p))
}

/// Coefficients `(a3, a2, a0)` of the bridge polynomial
/// `pi(t) = a3 (t - s2)^3 + a2 (t - s2)^2 + a0` with `s1 = r - eps`,
/// `s2 = r + eps`, interpolating
/// `pi(s2) = r^p`, `pi'(s2) = 0`, `pi(s1) = (r-eps)^p`,
/// `pi'(s1) = p (r-eps)^{p-1}`.
pub fn cubic_coefficients(r: f64, eps: f64, p: f64) -> Result<(f64, f64, f64)> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("r must be positive, got {r}")));
    }
    if !(eps > 0.0 && eps < r) {
        return Err(Error::InvalidParameter(format!(
            "eps must lie in (0, r) = (0, {r}), got {eps}"
        )));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    let width = 2.0 * eps; // s2 - s1
    let g1 = p * (r - eps).powf(p - 1.0);
    let g2 = (r - eps).powf(p);
    let g3 = r.powf(p);
    let a0 = g3;
    let a2 = g1 / width - 3.0 * (g3 - g2) / (width * width);
    let a3 = g1 / (3.0 * width * width) + 2.0 * a2 / (3.0 * width);
    Ok((a3, a2, a0))
}

/// The smoothed truncated power potential with precomputed bridge
/// coefficients.
///
/// Even, continuous, continuously differentiable; equals `|t|^p` below
/// `r - eps` and caps at `r^p` above `r + eps`. The second derivative is
/// bounded below by `2 * a2` with `a2 < 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothedPotential {
    pub p: f64,
    pub r: f64,
    pub eps: f64,
    pub cubic_a3: f64,
    pub cubic_a2: f64,
    pub cubic_a0: f64,
}

impl SmoothedPotential {
    pub fn new(p: f64, r: f64, eps: f64) -> Result<Self> {
        let (a3, a2, a0) = cubic_coefficients(r, eps, p)?;
        debug_assert!(a2 < 0.0 && a3 <= 0.0);
        Ok(SmoothedPotential {
            p,
            r,
            eps,
            cubic_a3: a3,
            cubic_a2: a2,
            cubic_a0: a0,
        })
    }

    pub(crate) fn bridge(&self, t: f64) -> f64 {
        let d = t - (self.r + self.eps);
        self.cubic_a3 * d * d * d + self.cubic_a2 * d * d + self.cubic_a0
    }

    pub(crate) fn bridge_derivative(&self, t: f64) -> f64 {
        let d = t - (self.r + self.eps);
        3.0 * self.cubic_a3 * d * d + 2.0 * self.cubic_a2 * d
    }

    /// `W_r^{p,eps}(t)`.
    pub fn value(&self, t: f64) -> f64 {
        let a = t.abs();
        if a <= self.r - self.eps {
            a.powf(self.p)
        } else if a >= self.r + self.eps {
            self.cubic_a0
        } else {
            self.bridge(a)
        }
    }

    /// Derivative of [`value`](Self::value); odd, bounded by `p r^{p-1}`.
    ///
    /// For `p = 1` the potential has a kink at the origin; this returns 0
    /// there and the dead zone is handled by the thresholding map.
    pub fn derivative(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let a = t.abs();
        let d = if a <= self.r - self.eps {
            self.p * a.powf(self.p - 1.0)
        } else if a >= self.r + self.eps {
            0.0
        } else {
            self.bridge_derivative(a)
        };
        d * t.signum()
    }

    /// Lower bound of the second derivative, `2 * a2 < 0`.
    pub fn curvature_lower_bound(&self) -> f64 {
        2.0 * self.cubic_a2
    }
}

/// The semiconvexity threshold `gamma * |a2|`: any `omega` strictly above it
/// makes `gamma * W(t) + omega * t^2` convex. For `p = 2` this is
/// `gamma * (1/4 + r / (2 eps))`.
pub fn omega_lower_bound(pot: &SmoothedPotential, gamma: f64) -> f64 {
    gamma * pot.cubic_a2.abs()
}
