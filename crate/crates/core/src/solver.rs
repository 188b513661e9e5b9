//! Outer loop of the nested algorithm: re-centering of the quadratic
//! perturbation, adaptive inner loops, rescaling, and convergence
//! diagnostics (feasibility gap, step norm, energy, criticality residual).

use crate::error::{Error, Result};
use crate::inner::{InnerSettings, StepContext};
use crate::linalg::{self, cg_solve, CgSettings, OperatorHandle};
use crate::problems::ConstrainedProblem;

/// Choice of the perturbation weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OmegaChoice {
    /// `1.0001 * gamma * deficit`: the smallest admissible weight, hence the
    /// largest implicit step `1 / omega`. Note the inner contraction factor
    /// degrades towards 1 as `omega` approaches the bound; fixed choices
    /// with more headroom trade outer step size for much faster inner loops.
    Auto,
    /// A fixed weight in the problem's original scaling; must exceed
    /// `gamma * deficit`.
    Fixed(f64),
}

/// Outer-solver configuration.
#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    /// Exponent of the adaptive inner stopping rule `ell^(-alpha)`;
    /// requires `alpha > 1`.
    pub alpha: f64,
    pub omega: OmegaChoice,
    pub max_outer: usize,
    pub feas_tol: f64,
    pub step_tol: f64,
    pub crit_tol: f64,
    pub inner: InnerSettings,
    /// CG settings for the criticality least-squares solve on `A A*`.
    pub crit_cg: CgSettings,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            alpha: 1.5,
            omega: OmegaChoice::Auto,
            max_outer: 200,
            feas_tol: 1e-6,
            step_tol: 1e-6,
            crit_tol: 1e-4,
            inner: InnerSettings::default(),
            crit_cg: CgSettings {
                tol: 1e-10,
                max_iter: 2000,
            },
        }
    }
}

/// One outer iteration's diagnostics, in the problem's original scaling.
#[derive(Clone, Copy, Debug)]
pub struct TraceRow {
    pub ell: usize,
    pub feas_gap: f64,
    pub step_norm: f64,
    pub energy: f64,
    pub inner_count: usize,
    pub crit_residual: f64,
}

/// Per-outer-iteration records of the quantities the convergence theory
/// controls.
#[derive(Clone, Debug, Default)]
pub struct IterateTrace {
    pub rows: Vec<TraceRow>,
}

impl IterateTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxOuter,
    /// Feasibility and step stagnated below tolerance while the criticality
    /// residual stayed above its tolerance.
    Stalled,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub v_final: Vec<f64>,
    pub q_final: Vec<f64>,
    pub trace: IterateTrace,
    pub status: SolveStatus,
}

/// Scaling factors applied by [`rescale_problem`]; `c` divides the fidelity
/// side (`T`, `g`, and `gamma` by `c^2`), `c_a` divides the constraint side
/// (`A`, `f`). Multipliers move between scalings with
/// `q_scaled = q * c_a / c^2`.
#[derive(Clone, Copy, Debug)]
pub struct ScaleRecord {
    pub c: f64,
    pub c_a: f64,
}

impl ScaleRecord {
    pub fn scale_q_in(&self, q: &[f64]) -> Vec<f64> {
        let s = self.c_a / (self.c * self.c);
        q.iter().map(|x| x * s).collect()
    }

    pub fn scale_q_out(&self, q_scaled: &[f64]) -> Vec<f64> {
        let s = (self.c * self.c) / self.c_a;
        q_scaled.iter().map(|x| x * s).collect()
    }

    /// Original-scale omega corresponding to a scaled one and vice versa.
    pub fn scale_omega_in(&self, omega: f64) -> f64 {
        omega / (self.c * self.c)
    }

    /// Scaled energies relate to original ones by `J = c^2 J_scaled`.
    pub fn energy_out(&self, energy_scaled: f64) -> f64 {
        self.c * self.c * energy_scaled
    }
}

/// Rescale so that `||T'|| < 1`, `sqrt(lambda) ||A'|| < 1`, and
/// `omega / c^2 < 1`: `T' = T/c`, `g' = g/c`, `gamma' = gamma/c^2` with
/// `c = 1.01 max(||T||, 1, sqrt(omega))`, and `A' = A/c_a`, `f' = f/c_a`
/// with `c_a = 1.01 max(sqrt(lambda) ||A||, 1)`. The feasible set and the
/// constrained minimizers are unchanged: the scaled objective is exactly
/// `J / c^2`.
pub fn rescale_problem(
    problem: &ConstrainedProblem,
    omega: f64,
    lambda: f64,
) -> (ConstrainedProblem, ScaleRecord) {
    let t_norm = problem.t_op.norm_est();
    let a_norm = problem.a_op.norm_est();
    let c = 1.01 * t_norm.max(1.0).max(omega.max(0.0).sqrt());
    let c_a = 1.01 * (lambda.sqrt() * a_norm).max(1.0);

    let scaled = ConstrainedProblem {
        t_op: problem.t_op.scaled(1.0 / c),
        g: problem.g.iter().map(|x| x / c).collect(),
        a_op: problem.a_op.scaled(1.0 / c_a),
        f: problem.f.iter().map(|x| x / c_a).collect(),
        gamma: problem.gamma / (c * c),
        potential: problem.potential.clone(),
        m: problem.m,
    };
    (scaled, ScaleRecord { c, c_a })
}

/// Result of the criticality diagnostic: the distance of the smoothed
/// gradient to the range of `A*`, plus the flag of the normal-equations CG.
#[derive(Clone, Copy, Debug)]
pub struct CriticalityOutcome {
    pub residual: f64,
    pub cg_converged: bool,
}

/// Distance of `grad J(v)` to `ran(A*)`: solves `(A A*) w = A grad` by CG
/// and returns `||grad - A* w||`. Zero (up to tolerances) exactly at
/// constrained critical points.
pub fn criticality_residual(
    problem: &ConstrainedProblem,
    v: &[f64],
    cg: &CgSettings,
) -> CriticalityOutcome {
    let grad = problem.gradient(v);
    criticality_from_gradient(problem, &grad, cg)
}

fn criticality_from_gradient(
    problem: &ConstrainedProblem,
    grad: &[f64],
    cg: &CgSettings,
) -> CriticalityOutcome {
    let a = problem.a_op.clone();
    let p = a.out_dim();
    let gram = {
        let a = a.clone();
        OperatorHandle::new(p, p, move |w| a.apply(&a.apply_adjoint(w)), {
            move |_: &[f64]| unreachable!("cg never applies the adjoint")
        })
    };
    let rhs = a.apply(grad);
    let out = cg_solve(&gram, &rhs, cg, &vec![0.0; p]);
    let back = a.apply_adjoint(&out.x);
    let residual = linalg::dist(grad, &back);
    CriticalityOutcome {
        residual,
        cg_converged: out.converged,
    }
}

/// Run the nested algorithm; diagnostics accumulate in the returned trace.
pub fn solve(
    problem: &ConstrainedProblem,
    config: &SolverConfig,
    v0: &[f64],
    q0: &[f64],
) -> Result<SolveResult> {
    solve_with_sink(problem, config, v0, q0, |_| {})
}

/// As [`solve`], streaming each trace row to `sink` as it is produced.
pub fn solve_with_sink(
    problem: &ConstrainedProblem,
    config: &SolverConfig,
    v0: &[f64],
    q0: &[f64],
    mut sink: impl FnMut(&TraceRow),
) -> Result<SolveResult> {
    if !(config.alpha > 1.0) {
        return Err(Error::InvalidConfiguration(format!(
            "alpha must exceed 1, got {}",
            config.alpha
        )));
    }
    if config.max_outer == 0 {
        return Err(Error::InvalidConfiguration("max_outer must be >= 1".into()));
    }
    if v0.len() != problem.m {
        return Err(Error::DimensionMismatch {
            what: "initial iterate v0",
            expected: problem.m,
            got: v0.len(),
        });
    }
    if q0.len() != problem.a_op.out_dim() {
        return Err(Error::DimensionMismatch {
            what: "initial multiplier q0",
            expected: problem.a_op.out_dim(),
            got: q0.len(),
        });
    }
    if !(linalg::all_finite(v0) && linalg::all_finite(q0)) {
        return Err(Error::NonFinite {
            context: "initial data".into(),
        });
    }

    let bound = problem.omega_lower_bound();
    let omega0 = match config.omega {
        OmegaChoice::Auto => {
            if bound <= 0.0 {
                return Err(Error::InvalidConfiguration(
                    "automatic omega needs a potential with positive curvature deficit; \
                     set omega explicitly"
                        .into(),
                ));
            }
            1.0001 * bound
        }
        OmegaChoice::Fixed(w) => {
            if !(w > bound) {
                return Err(Error::InvalidConfiguration(format!(
                    "omega = {w} must exceed gamma * potential deficit = {bound}"
                )));
            }
            w
        }
    };

    let lambda = config.inner.lambda;
    let (scaled, record) = rescale_problem(problem, omega0, lambda);
    let omega_scaled = record.scale_omega_in(omega0);
    let ctx = StepContext::new(&scaled, omega_scaled, lambda)?;

    let mut v = v0.to_vec();
    let mut q = record.scale_q_in(q0);
    let mut trace = IterateTrace::default();
    let mut status = SolveStatus::MaxOuter;
    let mut stall_count = 0usize;

    for ell in 1..=config.max_outer {
        let u = v.clone();
        let q_prev_norm = linalg::norm(&q);
        let out = ctx.augmented_loop(&u, &q, ell, config.alpha, &config.inner);
        v = out.state.v;
        q = out.state.q;

        let gap_scaled = *out.gaps.last().unwrap_or(&0.0);
        // adaptive rule honored unless the inner cap fired
        debug_assert!(
            out.capped
                || (1.0 + q_prev_norm) * gap_scaled <= (ell as f64).powf(-config.alpha) + 1e-15,
        );
        let feas_gap = record.c_a * gap_scaled;
        let step_norm = linalg::dist(&v, &u);
        if !linalg::all_finite(&v) {
            return Err(Error::NonFinite {
                context: format!("outer iterate at ell = {ell}"),
            });
        }
        let (energy, grad) = problem.energy_and_gradient(&v);
        let crit = criticality_from_gradient(problem, &grad, &config.crit_cg);
        if !(energy.is_finite() && crit.residual.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("diagnostics at ell = {ell}"),
            });
        }

        let row = TraceRow {
            ell,
            feas_gap,
            step_norm,
            energy,
            inner_count: out.state.inner_count,
            crit_residual: crit.residual,
        };
        sink(&row);
        trace.rows.push(row);

        if feas_gap <= config.feas_tol
            && step_norm <= config.step_tol
            && crit.residual <= config.crit_tol
        {
            status = SolveStatus::Converged;
            break;
        }

        if feas_gap <= config.feas_tol
            && step_norm <= config.step_tol * 1e-2
            && crit.residual > config.crit_tol
        {
            stall_count += 1;
            if stall_count >= 10 {
                status = SolveStatus::Stalled;
                break;
            }
        } else {
            stall_count = 0;
        }
    }

    Ok(SolveResult {
        v_final: v,
        q_final: record.scale_q_out(&q),
        trace,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::potentials::SmoothedPotential;
    use crate::problems::{ComponentPotential, PotentialLayout};

    fn toy() -> ConstrainedProblem {
        let t = OperatorHandle::scaled_identity(2, 0.5);
        let a = OperatorHandle::from_dense(DenseMatrix::new(1, 2, vec![0.5, 0.5]).unwrap());
        let pot = SmoothedPotential::new(2.0, 1.5, 0.3).unwrap();
        ConstrainedProblem::new(
            t,
            vec![0.1, -0.2],
            a,
            vec![0.3],
            0.2,
            PotentialLayout::Uniform(ComponentPotential::Smoothed(pot)),
        )
        .unwrap()
    }

    #[test]
    fn rescale_mild_shrink_when_norms_small() {
        let p = toy();
        let (scaled, rec) = rescale_problem(&p, 0.6, 0.5);
        assert!((rec.c - 1.01).abs() <= 1e-12);
        assert!((rec.c_a - 1.01).abs() <= 1e-12);
        assert!(scaled.t_op.norm_est() < 1.0);
        assert!(0.5f64.sqrt() * scaled.a_op.norm_est() < 1.0);
    }

    #[test]
    fn rescale_enlarges_for_big_omega() {
        let p = toy();
        let omega = 25.0;
        let (scaled, rec) = rescale_problem(&p, omega, 0.5);
        assert!(rec.scale_omega_in(omega) < 1.0);
        assert!(scaled.t_op.norm_est() < 1.0);
    }

    #[test]
    fn rescaled_energy_is_exact_quotient() {
        let p = toy();
        let (scaled, rec) = rescale_problem(&p, 0.6, 0.5);
        for v in [[0.3, -0.8], [1.9, 0.4], [0.0, 0.0]] {
            let j = p.energy(&v);
            let js = scaled.energy(&v);
            assert!((rec.energy_out(js) - j).abs() <= 1e-12 * (1.0 + j.abs()));
        }
    }

    #[test]
    fn multiplier_scaling_round_trip() {
        let rec = ScaleRecord { c: 3.0, c_a: 1.7 };
        let q = vec![0.4, -2.0];
        let back = rec.scale_q_out(&rec.scale_q_in(&q));
        assert!(linalg::dist(&back, &q) <= 1e-15);
    }

    #[test]
    fn criticality_zero_at_origin_with_zero_data() {
        let t = OperatorHandle::scaled_identity(2, 0.5);
        let a = OperatorHandle::from_dense(DenseMatrix::new(1, 2, vec![0.5, 0.5]).unwrap());
        let pot = SmoothedPotential::new(2.0, 1.5, 0.3).unwrap();
        let p = ConstrainedProblem::new(
            t,
            vec![0.0; 2],
            a,
            vec![0.0],
            0.2,
            PotentialLayout::Uniform(ComponentPotential::Smoothed(pot)),
        )
        .unwrap();
        let out = criticality_residual(&p, &[0.0, 0.0], &CgSettings::default());
        assert!(out.residual <= 1e-12);
    }

    #[test]
    fn solve_validates_configuration() {
        let p = toy();
        let mut config = SolverConfig::default();
        config.alpha = 1.0;
        assert!(solve(&p, &config, &[0.0; 2], &[0.0]).is_err());

        let mut config = SolverConfig::default();
        config.omega = OmegaChoice::Fixed(0.1); // below 0.55 bound
        assert!(solve(&p, &config, &[0.0; 2], &[0.0]).is_err());

        let config = SolverConfig::default();
        assert!(solve(&p, &config, &[0.0; 3], &[0.0]).is_err()); // wrong dim
    }

    #[test]
    fn solve_toy_reaches_feasibility() {
        let p = toy();
        let config = SolverConfig {
            omega: OmegaChoice::Fixed(1.1), // headroom over the 0.55 bound
            max_outer: 400,
            feas_tol: 1e-6,
            step_tol: 1e-6,
            crit_tol: 1e-4,
            ..Default::default()
        };
        let res = solve(&p, &config, &[0.0; 2], &[0.0]).unwrap();
        assert_eq!(res.status, SolveStatus::Converged, "trace: {:?}", res.trace.rows.last());
        let last = res.trace.rows.last().unwrap();
        assert!(last.feas_gap <= 1e-6);
        assert!(last.crit_residual <= 1e-4);
        // constraint in original units
        let av = p.a_op.apply(&res.v_final);
        assert!((av[0] - 0.3).abs() <= 1e-6);
    }
}
