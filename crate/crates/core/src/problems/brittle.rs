//! Quasi-static brittle fracture of a 1-D rod under a boundary displacement
//! ramp.
//!
//! The unknown is the strain field `v` on `N` intervals; the objective is
//! `gamma * sum_i h * W(v_i)` with the smoothed truncated quadratic, and the
//! single constraint `sum_i h v_i = 2 t` encodes the prescribed boundary
//! displacements `-t` and `t`.
//!
//! Crack nucleation needs a defect. In a perfectly homogeneous rod the
//! uniform strain `v = 2t` is a constrained critical point at every load
//! (its gradient is a multiple of the constraint row), so the iteration
//! tracks the elastic branch forever; with white-noise seeding the concave
//! bridge of the potential amplifies every component's noise at once and
//! the rod shatters into many micro-jumps. The model here weakens a single
//! seeded interval by a small fraction of the truncation radius. Below the
//! weak interval's bridge nothing changes (all branches are identical
//! quadratics), so the elastic phase is exact; once the uniform strain
//! reaches the weak bridge at `2t = (1 - defect_fraction) r - eps`, the
//! uniform state stops being critical, the weak interval absorbs the whole
//! elongation, and every other interval relaxes back into its stable
//! quadratic well: a single sharp crack.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, OperatorHandle};
use crate::potentials::SmoothedPotential;
use crate::problems::{ComponentPotential, ConstrainedProblem, PotentialLayout};
use crate::solver::{solve, SolveStatus, SolverConfig};

/// 1-D mesh: `intervals` cells of width `h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Line1d {
    pub intervals: usize,
    pub h: f64,
}

impl Line1d {
    pub fn new(intervals: usize, h: f64) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::InvalidParameter("need at least one interval".into()));
        }
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mesh width must be positive, got {h}"
            )));
        }
        Ok(Line1d { intervals, h })
    }

    /// Mesh of the unit interval.
    pub fn unit(intervals: usize) -> Result<Self> {
        Self::new(intervals, 1.0 / intervals as f64)
    }
}

/// Cumulative line integration: `u_0 = boundary_value`,
/// `u_i = u_{i-1} + h v_{i-1}`.
pub fn line_integrate(v: &[f64], boundary_value: f64, h: f64) -> Vec<f64> {
    let mut u = Vec::with_capacity(v.len() + 1);
    u.push(boundary_value);
    let mut acc = boundary_value;
    for &vi in v {
        acc += h * vi;
        u.push(acc);
    }
    u
}

/// Model constants for the rod: regularization weight, truncation radius,
/// smoothing width, the discrete scaling of the potential term, and the
/// defect.
#[derive(Clone, Copy, Debug)]
pub struct BrittleSetup {
    pub grid: Line1d,
    pub gamma: f64,
    pub r: f64,
    pub eps: f64,
    /// Weight each interval's potential by `h` (the quadrature-consistent
    /// scaling). When false the potentials are summed unweighted.
    pub h_weighted: bool,
    /// Relative reduction of the truncation radius at the defect interval;
    /// 0 gives a homogeneous rod (which never leaves the elastic branch).
    pub defect_fraction: f64,
    /// Defect location; [`evolve_brittle`] draws one from its seed when
    /// unset.
    pub defect_site: Option<usize>,
}

/// Problem at load `t`: zero fidelity term, effective weight `gamma * h` on
/// each interval's potential, one constraint row `(h, ..., h)` with datum
/// `2 t` (total elongation under boundary displacements `-t`, `t`).
pub fn assemble_brittle_problem(setup: &BrittleSetup, t_load: f64) -> Result<ConstrainedProblem> {
    let m = setup.grid.intervals;
    let h = setup.grid.h;
    if !(0.0..1.0).contains(&setup.defect_fraction) {
        return Err(Error::InvalidParameter(format!(
            "defect fraction must lie in [0, 1), got {}",
            setup.defect_fraction
        )));
    }
    let pot = SmoothedPotential::new(2.0, setup.r, setup.eps)?;
    let potential = match setup.defect_site {
        Some(site) if setup.defect_fraction > 0.0 => {
            if site >= m {
                return Err(Error::InvalidParameter(format!(
                    "defect site {site} outside the {m} intervals"
                )));
            }
            let weak_r = setup.r * (1.0 - setup.defect_fraction);
            let weak = SmoothedPotential::new(2.0, weak_r, setup.eps.min(weak_r / 2.0))?;
            let mut comps = vec![ComponentPotential::Smoothed(pot); m];
            comps[site] = ComponentPotential::Smoothed(weak);
            PotentialLayout::PerComponent(comps)
        }
        _ => PotentialLayout::Uniform(ComponentPotential::Smoothed(pot)),
    };
    let gamma_eff = if setup.h_weighted {
        setup.gamma * h
    } else {
        setup.gamma
    };
    let a = OperatorHandle::from_dense(DenseMatrix::new(1, m, vec![h; m])?)
        .with_norm_hint(h * (m as f64).sqrt());
    ConstrainedProblem::new(
        OperatorHandle::zero_map(m),
        Vec::new(),
        a,
        vec![2.0 * t_load],
        gamma_eff,
        potential,
    )
}

/// One load step of the evolution.
#[derive(Clone, Debug)]
pub struct EvolutionStep {
    pub t: f64,
    /// Strain field at this load.
    pub v: Vec<f64>,
    /// Displacement, from line integration with boundary value `-t`.
    pub u: Vec<f64>,
    pub energy: f64,
    pub wall_seconds: f64,
    pub outer_iterations: usize,
    pub converged: bool,
    /// Energy fell by more than half relative to the previous step.
    pub ruptured: bool,
}

/// The whole displacement-controlled evolution.
#[derive(Clone, Debug, Default)]
pub struct EvolutionRecord {
    pub steps: Vec<EvolutionStep>,
}

/// Evolve the rod through loads `t = dt, 2 dt, ..., t_end`, warm-starting
/// each solve from the previous strain and multiplier. When the setup has a
/// positive defect fraction and no fixed site, one interval is drawn from
/// the seed and weakened for the whole evolution. Solver failures are
/// recorded and the evolution continues from the previous state.
pub fn evolve_brittle(
    setup: &BrittleSetup,
    dt: f64,
    t_end: f64,
    config: &SolverConfig,
    seed: u64,
) -> Result<EvolutionRecord> {
    if !(dt > 0.0 && t_end > 0.0) {
        return Err(Error::InvalidParameter(
            "dt and t_end must be positive".into(),
        ));
    }
    let m = setup.grid.intervals;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut setup = *setup;
    if setup.defect_fraction > 0.0 && setup.defect_site.is_none() {
        setup.defect_site = Some(rng.gen_range(0..m));
    }

    let mut v = vec![0.0; m];
    let mut q = vec![0.0];
    let mut record = EvolutionRecord::default();

    // initial state at t = 0
    let initial = assemble_brittle_problem(&setup, 0.0)?;
    record.steps.push(EvolutionStep {
        t: 0.0,
        v: v.clone(),
        u: line_integrate(&v, 0.0, setup.grid.h),
        energy: initial.energy(&v),
        wall_seconds: 0.0,
        outer_iterations: 0,
        converged: true,
        ruptured: false,
    });

    let steps = (t_end / dt + 0.5).floor() as usize;
    for k in 1..=steps {
        let t = k as f64 * dt;
        let problem = assemble_brittle_problem(&setup, t)?;

        let warm = v.clone();
        let start = Instant::now();
        let solved = solve(&problem, config, &warm, &q);
        let wall_seconds = start.elapsed().as_secs_f64();

        let (outer_iterations, converged) = match solved {
            Ok(res) => {
                v = res.v_final;
                q = res.q_final;
                let n = res.trace.len();
                (n, res.status == SolveStatus::Converged)
            }
            Err(_) => (0, false), // keep previous state, flag the step
        };

        let energy = problem.energy(&v);
        let prev_energy = record.steps.last().map(|s| s.energy).unwrap_or(0.0);
        let ruptured = prev_energy > 1e-12 && energy < 0.5 * prev_energy;

        record.steps.push(EvolutionStep {
            t,
            v: v.clone(),
            u: line_integrate(&v, -t, setup.grid.h),
            energy,
            wall_seconds,
            outer_iterations,
            converged,
            ruptured,
        });
    }
    Ok(record)
}
