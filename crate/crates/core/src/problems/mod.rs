//! Problem containers and builders for the concrete applications: 2-D
//! Mumford-Shah denoising, 1-D brittle fracture evolution, and 1-D cohesive
//! fracture.
//!
//! A [`ConstrainedProblem`] is the separable objective
//! `||T v - g||^2 + gamma * sum_k U_k(v_k)` together with the linear
//! constraint `A v = f`. The scalar maps `U_k` are either a shared smoothed
//! truncated power or, for the cohesive model, a per-component assignment
//! with a single nonquadratic jump term.

mod brittle;
mod cohesive;
mod grid;
mod mumford_shah;

pub use brittle::{
    assemble_brittle_problem, evolve_brittle, line_integrate, BrittleSetup, EvolutionRecord,
    EvolutionStep, Line1d,
};
pub use cohesive::{assemble_cohesive_problem, cohesive_potential, CohesiveAssembly};
pub use grid::{
    apply_pseudo_inverse, apply_pseudo_inverse_adjoint, build_curl_constraint,
    build_grad_operator, GridSpec,
};
pub use mumford_shah::{assemble_ms_problem, reconstruct_image};

use crate::error::{Error, Result};
use crate::linalg::{self, OperatorHandle};
use crate::potentials::SmoothedPotential;
use crate::thresholding;

/// A scalar potential attached to one component of the unknown.
#[derive(Clone, Copy, Debug)]
pub enum ComponentPotential {
    /// No penalty; the proximity map is the identity.
    Zero,
    /// Smoothed truncated power `W_r^{p,eps}`.
    Smoothed(SmoothedPotential),
    /// Cohesive jump energy `g(|t|)` with `g(s) = -s^2/(2 cap) + s` below
    /// `cap` and constant `cap / 2` above.
    CohesiveJump { cap: f64 },
}

impl ComponentPotential {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            ComponentPotential::Zero => 0.0,
            ComponentPotential::Smoothed(pot) => pot.value(t),
            ComponentPotential::CohesiveJump { cap } => {
                let s = t.abs();
                if s < *cap {
                    -s * s / (2.0 * cap) + s
                } else {
                    cap / 2.0
                }
            }
        }
    }

    /// Pointwise derivative; 0 at kinks (the origin for the cohesive jump),
    /// where the proximity map handles the set-valued part.
    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            ComponentPotential::Zero => 0.0,
            ComponentPotential::Smoothed(pot) => pot.derivative(t),
            ComponentPotential::CohesiveJump { cap } => {
                if t == 0.0 {
                    0.0
                } else {
                    let s = t.abs();
                    let d = if s < *cap { 1.0 - s / cap } else { 0.0 };
                    d * t.signum()
                }
            }
        }
    }

    /// Curvature deficit `(-inf U'') / 2 >= 0`. The semiconvexity bound on
    /// `omega` is `gamma` times the worst deficit over components, and the
    /// thresholding condition is `mu * deficit < 1`.
    pub fn curvature_deficit(&self) -> f64 {
        match self {
            ComponentPotential::Zero => 0.0,
            ComponentPotential::Smoothed(pot) => pot.cubic_a2.abs(),
            ComponentPotential::CohesiveJump { cap } => 1.0 / (2.0 * cap),
        }
    }

    /// `argmin_t (t - xi)^2 + mu U(t)`; requires `mu * curvature_deficit < 1`.
    pub fn prox(&self, mu: f64, xi: f64) -> f64 {
        match self {
            ComponentPotential::Zero => xi,
            ComponentPotential::Smoothed(pot) => thresholding::threshold_with(pot, mu, xi),
            ComponentPotential::CohesiveJump { cap } => {
                debug_assert!(mu < 2.0 * cap);
                if xi == 0.0 {
                    return 0.0;
                }
                let s = xi.signum();
                let x = xi.abs();
                if x <= mu / 2.0 {
                    0.0
                } else if x < *cap {
                    s * (2.0 * x - mu) / (2.0 - mu / cap)
                } else {
                    xi
                }
            }
        }
    }
}

/// How scalar potentials are assigned to components.
#[derive(Clone, Debug)]
pub enum PotentialLayout {
    Uniform(ComponentPotential),
    PerComponent(Vec<ComponentPotential>),
}

impl PotentialLayout {
    pub fn component(&self, k: usize) -> &ComponentPotential {
        match self {
            PotentialLayout::Uniform(p) => p,
            PotentialLayout::PerComponent(v) => &v[k],
        }
    }

    /// Worst curvature deficit over all components.
    pub fn max_curvature_deficit(&self) -> f64 {
        match self {
            PotentialLayout::Uniform(p) => p.curvature_deficit(),
            PotentialLayout::PerComponent(v) => v
                .iter()
                .map(|p| p.curvature_deficit())
                .fold(0.0, f64::max),
        }
    }
}

/// The linearly constrained separable objective
/// `J(v) = ||T v - g||^2 + gamma * sum_k U_k(v_k)` subject to `A v = f`.
#[derive(Clone, Debug)]
pub struct ConstrainedProblem {
    pub t_op: OperatorHandle,
    pub g: Vec<f64>,
    pub a_op: OperatorHandle,
    pub f: Vec<f64>,
    pub gamma: f64,
    pub potential: PotentialLayout,
    pub m: usize,
}

impl ConstrainedProblem {
    pub fn new(
        t_op: OperatorHandle,
        g: Vec<f64>,
        a_op: OperatorHandle,
        f: Vec<f64>,
        gamma: f64,
        potential: PotentialLayout,
    ) -> Result<Self> {
        let m = t_op.in_dim();
        if a_op.in_dim() != m {
            return Err(Error::DimensionMismatch {
                what: "constraint operator input",
                expected: m,
                got: a_op.in_dim(),
            });
        }
        if g.len() != t_op.out_dim() {
            return Err(Error::DimensionMismatch {
                what: "fidelity datum g",
                expected: t_op.out_dim(),
                got: g.len(),
            });
        }
        if f.len() != a_op.out_dim() {
            return Err(Error::DimensionMismatch {
                what: "constraint datum f",
                expected: a_op.out_dim(),
                got: f.len(),
            });
        }
        if let PotentialLayout::PerComponent(v) = &potential {
            if v.len() != m {
                return Err(Error::DimensionMismatch {
                    what: "per-component potential table",
                    expected: m,
                    got: v.len(),
                });
            }
        }
        if !(gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        Ok(ConstrainedProblem {
            t_op,
            g,
            a_op,
            f,
            gamma,
            potential,
            m,
        })
    }

    /// Objective value `||T v - g||^2 + gamma * sum_k U_k(v_k)`.
    pub fn energy(&self, v: &[f64]) -> f64 {
        let resid = linalg::sub(&self.t_op.apply(v), &self.g);
        let fid = linalg::dot(&resid, &resid);
        let pot: f64 = v
            .iter()
            .enumerate()
            .map(|(k, &vk)| self.potential.component(k).value(vk))
            .sum();
        fid + self.gamma * pot
    }

    /// Gradient `2 T*(T v - g) + gamma * (U_k'(v_k))_k` of the smoothed
    /// objective.
    pub fn gradient(&self, v: &[f64]) -> Vec<f64> {
        self.energy_and_gradient(v).1
    }

    /// Energy and gradient sharing a single forward application of `T`.
    pub fn energy_and_gradient(&self, v: &[f64]) -> (f64, Vec<f64>) {
        let resid = linalg::sub(&self.t_op.apply(v), &self.g);
        let fid = linalg::dot(&resid, &resid);
        let mut grad = self.t_op.apply_adjoint(&resid);
        linalg::scale(2.0, &mut grad);
        let mut pot_sum = 0.0;
        for (k, (gk, &vk)) in grad.iter_mut().zip(v).enumerate() {
            let comp = self.potential.component(k);
            pot_sum += comp.value(vk);
            *gk += self.gamma * comp.derivative(vk);
        }
        (fid + self.gamma * pot_sum, grad)
    }

    /// Worst potential curvature deficit; the semiconvexity bound on `omega`
    /// is `gamma * potential_deficit()`.
    pub fn potential_deficit(&self) -> f64 {
        self.potential.max_curvature_deficit()
    }

    /// Smallest admissible `omega` (exclusive): `gamma * max_k deficit_k`.
    pub fn omega_lower_bound(&self) -> f64 {
        self.gamma * self.potential_deficit()
    }

    /// Componentwise proximity map `argmin (t - xi_k)^2 + mu U_k(t)`.
    pub fn prox(&self, mu: f64, xi: &[f64]) -> Vec<f64> {
        xi.iter()
            .enumerate()
            .map(|(k, &x)| self.potential.component(k).prox(mu, x))
            .collect()
    }
}
