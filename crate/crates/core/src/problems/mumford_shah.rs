//! Discrete Mumford-Shah denoising reformulated over gradient fields.
//!
//! The unknown is the stacked gradient field `v`; the fidelity map applies
//! the gradient's pseudo-inverse (matrix-free, by projected conjugate
//! gradients on the normal equations), the constraint is the per-cell
//! circulation operator whose kernel is exactly the gradient fields, and the
//! image is recovered afterwards by another pseudo-inverse application plus
//! its mean value.

use crate::error::{Error, Result};
use crate::linalg::{CgSettings, OperatorHandle};
use crate::potentials::SmoothedPotential;
use crate::problems::grid::{
    apply_pseudo_inverse, apply_pseudo_inverse_adjoint, build_curl_constraint,
    build_grad_operator, GridSpec,
};
use crate::problems::{ComponentPotential, ConstrainedProblem, PotentialLayout};

/// CG settings used inside the fidelity operator's pseudo-inverse solves.
/// Tight enough that the inexactness sits well below the fixed-point
/// stopping thresholds usual for this problem.
pub fn fidelity_cg_settings() -> CgSettings {
    CgSettings {
        tol: 1e-12,
        max_iter: 10_000,
    }
}

/// Assemble the gradient-field reformulation of the denoising problem for a
/// square image (row-major, `n * n` entries): fidelity
/// `|| D^+ v - D^+ D g ||^2`, weight `gamma` on the smoothed truncated
/// quadratic of each gradient component, and the circulation constraint
/// `A v = 0`.
pub fn assemble_ms_problem(
    image: &[f64],
    grid: GridSpec,
    gamma: f64,
    r: f64,
    eps: f64,
) -> Result<ConstrainedProblem> {
    if image.len() != grid.nodes() {
        return Err(Error::DimensionMismatch {
            what: "image pixels",
            expected: grid.nodes(),
            got: image.len(),
        });
    }
    let pot = SmoothedPotential::new(2.0, r, eps)?;

    let dh = build_grad_operator(grid);
    let curl = build_curl_constraint(grid);
    let cg = fidelity_cg_settings();

    // zero-mean representative of the datum: D^+ D g
    let g_tilde = apply_pseudo_inverse(&dh, &dh.apply(image), &cg).x;

    let t_op = {
        let dh_f = dh.clone();
        let dh_a = dh.clone();
        OperatorHandle::new(
            grid.gradient_len(),
            grid.nodes(),
            move |v| apply_pseudo_inverse(&dh_f, v, &cg).x,
            move |u| apply_pseudo_inverse_adjoint(&dh_a, u, &cg).x,
        )
    };

    ConstrainedProblem::new(
        t_op,
        g_tilde,
        curl,
        vec![0.0; grid.cells()],
        gamma,
        PotentialLayout::Uniform(ComponentPotential::Smoothed(pot)),
    )
}

/// Recover the image from a (curl-consistent) gradient field and its mean
/// value: `u = D^+ v + c_g`.
pub fn reconstruct_image(v: &[f64], c_g: f64, grid: GridSpec, cg: &CgSettings) -> Vec<f64> {
    let dh = build_grad_operator(grid);
    let mut u = apply_pseudo_inverse(&dh, v, cg).x;
    for x in u.iter_mut() {
        *x += c_g;
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{adjoint_check, dist, dot, norm, sub};
    use crate::solver::criticality_residual;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid5() -> GridSpec {
        GridSpec::new(5, 1.0).unwrap()
    }

    #[test]
    fn constant_image_gives_zero_datum_and_zero_critical_point() {
        let g = grid5();
        let p = assemble_ms_problem(&vec![0.7; 25], g, 0.5, 1.5, 0.3).unwrap();
        assert!(norm(&p.g) <= 1e-12, "datum of a constant image");
        // v = 0 is feasible (curl 0 = 0) and the gradient vanishes there
        let grad = p.gradient(&vec![0.0; g.gradient_len()]);
        assert!(norm(&grad) <= 1e-10);
        let crit = criticality_residual(&p, &vec![0.0; g.gradient_len()], &CgSettings::default());
        assert!(crit.residual <= 1e-10);
    }

    #[test]
    fn fidelity_operator_adjoint_consistency() {
        let p = assemble_ms_problem(&vec![0.0; 25], grid5(), 0.5, 1.5, 0.3).unwrap();
        assert!(adjoint_check(&p.t_op, 10, 77) <= 1e-8);
    }

    #[test]
    fn data_gradient_is_feasible_energy_competitor() {
        // On a two-level image, the solver's output must not exceed the
        // energy of the data's own gradient field; here we just check that
        // the competitor is feasible and its energy finite and positive.
        let g = grid5();
        let mut img = vec![0.2; 25];
        for i in 0..5 {
            for j in 0..5 {
                if j >= 3 {
                    img[i * 5 + j] = 0.9;
                }
            }
        }
        let p = assemble_ms_problem(&img, g, 0.5, 1.5, 0.3).unwrap();
        let dh = build_grad_operator(g);
        let v_data = dh.apply(&img);
        let c = p.a_op.apply(&v_data);
        assert!(norm(&c) <= 1e-12, "data gradient must be curl-free");
        assert!(p.energy(&v_data) > 0.0);
    }

    #[test]
    fn reconstruct_constant_field() {
        let g = grid5();
        let u = reconstruct_image(&vec![0.0; g.gradient_len()], 5.0, g, &CgSettings::default());
        for x in &u {
            assert!((x - 5.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn reconstruct_inverts_gradient_of_zero_mean_image() {
        let g = grid5();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut img: Vec<f64> = (0..25).map(|_| rng.gen::<f64>()).collect();
        let mean = img.iter().sum::<f64>() / 25.0;
        for x in img.iter_mut() {
            *x -= mean;
        }
        let dh = build_grad_operator(g);
        let v = dh.apply(&img);
        let cg = CgSettings::new(1e-12, 2000).unwrap();
        let back = reconstruct_image(&v, 0.0, g, &cg);
        assert!(dist(&back, &img) <= 1e-8);
    }

    #[test]
    fn reconstruct_mean_is_exact() {
        let g = grid5();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let v: Vec<f64> = (0..g.gradient_len()).map(|_| rng.gen::<f64>() - 0.5).collect();
        let u = reconstruct_image(&v, 1.25, g, &CgSettings::default());
        let mean = u.iter().sum::<f64>() / u.len() as f64;
        assert!((mean - 1.25).abs() <= 1e-10);
    }

    #[test]
    fn mean_split_orthogonality() {
        // || u - g ||^2 = || D+D(u - g) ||^2 + n^2 (mean u - mean g)^2
        let g = grid5();
        let dh = build_grad_operator(g);
        let cg = CgSettings::new(1e-13, 4000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let u: Vec<f64> = (0..25).map(|_| rng.gen::<f64>()).collect();
        let gv: Vec<f64> = (0..25).map(|_| rng.gen::<f64>()).collect();
        let diff = sub(&u, &gv);
        let lhs = dot(&diff, &diff);
        let proj = apply_pseudo_inverse(&dh, &dh.apply(&diff), &cg).x;
        let mean = diff.iter().sum::<f64>() / 25.0;
        let rhs = dot(&proj, &proj) + 25.0 * mean * mean;
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.max(1.0), "{lhs} vs {rhs}");
    }
}
