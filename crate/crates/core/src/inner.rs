//! Inner loop machinery: the componentwise thresholding fixed point that
//! minimizes the strongly convex augmented objective
//! `J(v) + omega ||v - u||^2 + lambda ||A v - f||^2 - <q, A v>`,
//! and the multiplier iteration around it with its adaptive stopping rule.
//!
//! Everything here assumes the problem has been rescaled so that
//! `||T|| < 1`, `sqrt(lambda) ||A|| < 1`, and `omega < 1` while
//! `omega > gamma * deficit`; under those bounds one fixed-point step is a
//! contraction with factor `delta = (3 - omega) / (3 - gamma * deficit)`.

use crate::error::{Error, Result};
use crate::linalg::{self, dist, norm};
use crate::problems::ConstrainedProblem;

/// Inner-loop controls: the augmented-term weight `lambda`, the fixed-point
/// stopping tolerance (on the distance to the exact minimizer), and
/// iteration caps for both loops.
#[derive(Clone, Copy, Debug)]
pub struct InnerSettings {
    pub lambda: f64,
    pub fixed_point_tol: f64,
    pub fixed_point_max_iter: usize,
    pub inner_max_iter: usize,
}

impl Default for InnerSettings {
    fn default() -> Self {
        InnerSettings {
            lambda: 0.5,
            fixed_point_tol: 1e-10,
            fixed_point_max_iter: 2_000_000,
            inner_max_iter: 1000,
        }
    }
}

/// Primal iterate, multiplier, and the number of multiplier updates the
/// adaptive rule consumed.
#[derive(Clone, Debug)]
pub struct AugmentedState {
    pub v: Vec<f64>,
    pub q: Vec<f64>,
    pub inner_count: usize,
}

/// Result of one inner multiplier loop.
#[derive(Clone, Debug)]
pub struct AugmentedOutcome {
    pub state: AugmentedState,
    /// `||A v_k - f||` after each multiplier update, nonincreasing in `k`.
    pub gaps: Vec<f64>,
    /// The loop hit `inner_max_iter` before the adaptive rule fired.
    pub capped: bool,
    /// Some fixed-point minimization hit its iteration cap.
    pub fixed_point_capped: bool,
    /// Total fixed-point iterations spent.
    pub fixed_point_iterations: usize,
}

/// Result of a single augmented minimization.
#[derive(Clone, Debug)]
pub struct MinimizeOutcome {
    pub v: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Validated, precomputed context for fixed-point steps on one (rescaled)
/// problem with fixed `omega` and `lambda`.
pub struct StepContext<'a> {
    problem: &'a ConstrainedProblem,
    omega: f64,
    lambda: f64,
    mu: f64,
    delta: f64,
}

impl<'a> StepContext<'a> {
    /// Checks the rescaling preconditions and the strong-convexity bound on
    /// `omega`; fails with a description of the violated bound.
    pub fn new(problem: &'a ConstrainedProblem, omega: f64, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidConfiguration(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        let t_norm = problem.t_op.norm_est();
        if !(t_norm < 1.0) {
            return Err(Error::InvalidConfiguration(format!(
                "fidelity operator must satisfy ||T|| < 1 after rescaling, estimated {t_norm}"
            )));
        }
        let a_norm = problem.a_op.norm_est();
        if !(lambda.sqrt() * a_norm < 1.0) {
            return Err(Error::InvalidConfiguration(format!(
                "constraint operator must satisfy sqrt(lambda) ||A|| < 1 after rescaling, got {}",
                lambda.sqrt() * a_norm
            )));
        }
        if !(omega > 0.0 && omega < 1.0) {
            return Err(Error::InvalidConfiguration(format!(
                "omega must lie in (0, 1) after rescaling, got {omega}"
            )));
        }
        let bound = problem.omega_lower_bound();
        if !(omega > bound) {
            return Err(Error::InvalidConfiguration(format!(
                "omega must exceed gamma * potential deficit = {bound}, got {omega}"
            )));
        }
        let mu = problem.gamma / 3.0;
        debug_assert!(mu * problem.potential_deficit() < 1.0);
        let delta = (3.0 - omega) / (3.0 - problem.gamma * problem.potential_deficit());
        Ok(StepContext {
            problem,
            omega,
            lambda,
            mu,
            delta,
        })
    }

    pub fn problem(&self) -> &ConstrainedProblem {
        self.problem
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Contraction factor `(3 - omega) / (3 - gamma * deficit)` of one
    /// fixed-point step; lies in (2/3, 1).
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// One thresholding fixed-point step: the proximity map applied to
    /// `(1/3) { [(I - T*T) + (I - lambda A*A) + (1 - omega) I] v
    ///          + T* g + lambda A* f + (1/2) A* q + omega u }`.
    pub fn fixed_point_step(&self, v: &[f64], q: &[f64], u: &[f64]) -> Vec<f64> {
        let p = self.problem;
        let t_resid = linalg::sub(&p.t_op.apply(v), &p.g);
        let w_t = p.t_op.apply_adjoint(&t_resid);

        let av = p.a_op.apply(v);
        let a_dir: Vec<f64> = av
            .iter()
            .zip(&p.f)
            .zip(q)
            .map(|((&avi, &fi), &qi)| self.lambda * (avi - fi) - 0.5 * qi)
            .collect();
        let w_a = p.a_op.apply_adjoint(&a_dir);

        let z: Vec<f64> = v
            .iter()
            .zip(&w_t)
            .zip(&w_a)
            .zip(u)
            .map(|(((&vi, &wt), &wa), &ui)| {
                vi - (wt + wa + self.omega * (vi - ui)) / 3.0
            })
            .collect();
        p.prox(self.mu, &z)
    }

    /// Iterate the fixed point until the step size guarantees
    /// `||v - v*|| <= fixed_point_tol` through the contraction bound
    /// (`step <= tol (1 - delta) / delta`), or the cap is hit.
    pub fn minimize_augmented(
        &self,
        u: &[f64],
        q: &[f64],
        v0: &[f64],
        settings: &InnerSettings,
    ) -> MinimizeOutcome {
        let threshold = settings.fixed_point_tol * (1.0 - self.delta) / self.delta;
        let mut v = v0.to_vec();
        for it in 1..=settings.fixed_point_max_iter {
            let next = self.fixed_point_step(&v, q, u);
            let step = dist(&next, &v);
            v = next;
            if step <= threshold {
                return MinimizeOutcome {
                    v,
                    iterations: it,
                    converged: true,
                };
            }
        }
        MinimizeOutcome {
            v,
            iterations: settings.fixed_point_max_iter,
            converged: false,
        }
    }

    /// The multiplier loop at outer index `ell`: repeat
    /// `v <- argmin`, `q <- q + 2 lambda (f - A v)` until
    /// `(1 + ||q0||) ||A v - f|| <= ell^(-alpha)`.
    pub fn augmented_loop(
        &self,
        u: &[f64],
        q0: &[f64],
        ell: usize,
        alpha: f64,
        settings: &InnerSettings,
    ) -> AugmentedOutcome {
        assert!(ell >= 1, "outer index starts at 1");
        assert!(alpha > 1.0, "adaptive rule requires alpha > 1");
        let target = (ell as f64).powf(-alpha);
        let q0_norm = norm(q0);

        let p = self.problem;
        let mut v = u.to_vec();
        let mut q = q0.to_vec();
        let mut gaps = Vec::new();
        let mut fixed_point_iterations = 0;
        let mut fixed_point_capped = false;

        for k in 1..=settings.inner_max_iter {
            let min_out = self.minimize_augmented(u, &q, &v, settings);
            fixed_point_iterations += min_out.iterations;
            fixed_point_capped |= !min_out.converged;
            v = min_out.v;

            let av = p.a_op.apply(&v);
            let gap = dist(&av, &p.f);
            for ((qi, &avi), &fi) in q.iter_mut().zip(&av).zip(&p.f) {
                *qi += 2.0 * self.lambda * (fi - avi);
            }

            if let Some(&prev) = gaps.last() {
                // feasibility is nonincreasing along the multiplier loop up
                // to inner-solve inexactness
                debug_assert!(
                    gap <= prev * (1.0 + 1e-9) + 1e-12,
                    "inner feasibility increased: {prev} -> {gap}"
                );
            }
            gaps.push(gap);

            if (1.0 + q0_norm) * gap <= target {
                return AugmentedOutcome {
                    state: AugmentedState {
                        v,
                        q,
                        inner_count: k,
                    },
                    gaps,
                    capped: false,
                    fixed_point_capped,
                    fixed_point_iterations,
                };
            }
        }

        AugmentedOutcome {
            state: AugmentedState {
                v,
                q,
                inner_count: settings.inner_max_iter,
            },
            gaps,
            capped: true,
            fixed_point_capped,
            fixed_point_iterations,
        }
    }
}
