//! Cohesive fracture of a 1-D bar with a single interface at the midpoint.
//!
//! The bar occupies two segments of `n_half` intervals each; strains on the
//! regular intervals enter quadratically through the fidelity map
//! `T = (A h)^{-1/2} (I - P_jump)`, while the jump across the interface pays
//! the concave cohesive energy `g(|s|)`. The boundary displacements impose
//! `sum_i v_i = bc_right - bc_left`.

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, OperatorHandle};
use crate::problems::{ComponentPotential, ConstrainedProblem, PotentialLayout};

/// Cohesive surface energy: `-s^2 / (2 R) + s` for `0 <= s < R`, constant
/// `R / 2` beyond. Continuous with continuous derivative at `s = R`.
pub fn cohesive_potential(s: f64, r_cap: f64) -> Result<f64> {
    if !(r_cap > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cohesive cap must be positive, got {r_cap}"
        )));
    }
    if s < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "cohesive potential takes a nonnegative opening, got {s}"
        )));
    }
    Ok(if s < r_cap {
        -s * s / (2.0 * r_cap) + s
    } else {
        r_cap / 2.0
    })
}

/// Assembled cohesive problem plus the strict convexity threshold on the
/// perturbation weight, `1 / (2 A h R)` in the model's own units (the bound
/// is stated for an `A h`-weighted proximal term, hence conservative for the
/// solver's plain Euclidean one).
#[derive(Clone, Debug)]
pub struct CohesiveAssembly {
    pub problem: ConstrainedProblem,
    pub omega_bound: f64,
    pub jump_index: usize,
    pub h: f64,
}

/// Build the cohesive problem: `2 * n_half` strain unknowns, quadratic
/// energy `(A h)^{-1} sum_{i != N} v_i^2`, cohesive energy `g(|v_N|)` at the
/// interface index `N = n_half`, and the elongation constraint
/// `sum_i v_i = bc_right - bc_left`.
pub fn assemble_cohesive_problem(
    n_half: usize,
    a_len: f64,
    r_cap: f64,
    bc_left: f64,
    bc_right: f64,
) -> Result<CohesiveAssembly> {
    if n_half == 0 {
        return Err(Error::InvalidParameter(
            "need at least one interval per half".into(),
        ));
    }
    if !(a_len > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "segment length must be positive, got {a_len}"
        )));
    }
    if !(r_cap > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cohesive cap must be positive, got {r_cap}"
        )));
    }

    let m = 2 * n_half;
    let jump = n_half;
    let h = 1.0 / n_half as f64;
    let scale = 1.0 / (a_len * h).sqrt();

    let t_op = OperatorHandle::new(
        m,
        m,
        move |x: &[f64]| {
            let mut y: Vec<f64> = x.iter().map(|v| scale * v).collect();
            y[jump] = 0.0;
            y
        },
        move |y: &[f64]| {
            let mut x: Vec<f64> = y.iter().map(|v| scale * v).collect();
            x[jump] = 0.0;
            x
        },
    )
    .with_norm_hint(scale);

    let a_op = OperatorHandle::from_dense(DenseMatrix::new(1, m, vec![1.0; m])?)
        .with_norm_hint((m as f64).sqrt());

    let mut comps = vec![ComponentPotential::Zero; m];
    comps[jump] = ComponentPotential::CohesiveJump { cap: r_cap };

    let problem = ConstrainedProblem::new(
        t_op,
        vec![0.0; m],
        a_op,
        vec![bc_right - bc_left],
        1.0,
        PotentialLayout::PerComponent(comps),
    )?;

    Ok(CohesiveAssembly {
        problem,
        omega_bound: 1.0 / (2.0 * a_len * h * r_cap),
        jump_index: jump,
        h,
    })
}
