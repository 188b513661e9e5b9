//! Discrete gradient, curl, and pseudo-inverse application on a square grid.
//!
//! Grid functions `u` live on `n x n` nodes, stored row-major with linear
//! index `i * n + j`. The gradient stacks forward differences in the first
//! index (`ux`, shape `(n-1) x n`) and in the second (`uy`, shape
//! `n x (n-1)`); its kernel is the constants, and the kernel of the per-cell
//! circulation operator built here is exactly the range of the gradient.

use crate::error::{Error, Result};
use crate::linalg::{cg_solve, cg_solve_projected, CgOutcome, CgSettings, OperatorHandle};

/// Square-grid geometry: `n` nodes per side, mesh width `h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub n: usize,
    pub h: f64,
}

impl GridSpec {
    pub fn new(n: usize, h: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 2 nodes per side, got {n}"
            )));
        }
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mesh width must be positive, got {h}"
            )));
        }
        Ok(GridSpec { n, h })
    }

    /// Number of nodes, `n^2`.
    pub fn nodes(&self) -> usize {
        self.n * self.n
    }

    /// Length of a stacked gradient field, `2 n (n-1)`.
    pub fn gradient_len(&self) -> usize {
        2 * self.n * (self.n - 1)
    }

    /// Number of cells, `(n-1)^2`.
    pub fn cells(&self) -> usize {
        (self.n - 1) * (self.n - 1)
    }
}

/// Forward-difference gradient `R^{n^2} -> R^{2n(n-1)}`; the adjoint is the
/// negative discrete divergence.
pub fn build_grad_operator(grid: GridSpec) -> OperatorHandle {
    let n = grid.n;
    let h = grid.h;
    let forward = move |u: &[f64]| {
        let mut out = vec![0.0; 2 * n * (n - 1)];
        // ux[i, j] = (u[i+1, j] - u[i, j]) / h
        for i in 0..n - 1 {
            for j in 0..n {
                out[i * n + j] = (u[(i + 1) * n + j] - u[i * n + j]) / h;
            }
        }
        // uy[i, j] = (u[i, j+1] - u[i, j]) / h
        let off = n * (n - 1);
        for i in 0..n {
            for j in 0..n - 1 {
                out[off + i * (n - 1) + j] = (u[i * n + j + 1] - u[i * n + j]) / h;
            }
        }
        out
    };
    let adjoint = move |w: &[f64]| {
        let mut out = vec![0.0; n * n];
        for i in 0..n - 1 {
            for j in 0..n {
                let val = w[i * n + j] / h;
                out[(i + 1) * n + j] += val;
                out[i * n + j] -= val;
            }
        }
        let off = n * (n - 1);
        for i in 0..n {
            for j in 0..n - 1 {
                let val = w[off + i * (n - 1) + j] / h;
                out[i * n + j + 1] += val;
                out[i * n + j] -= val;
            }
        }
        out
    };
    OperatorHandle::new(n * n, 2 * n * (n - 1), forward, adjoint)
}

/// Per-cell circulation of a stacked field `(wx, wy)`; one row per cell,
/// `(n-1)^2` rows in total, with kernel equal to the range of the gradient.
pub fn build_curl_constraint(grid: GridSpec) -> OperatorHandle {
    let n = grid.n;
    let h = grid.h;
    let forward = move |w: &[f64]| {
        let off = n * (n - 1);
        let mut out = vec![0.0; (n - 1) * (n - 1)];
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                let dy = w[off + (i + 1) * (n - 1) + j] - w[off + i * (n - 1) + j];
                let dx = w[i * n + j + 1] - w[i * n + j];
                out[i * (n - 1) + j] = (dy - dx) / h;
            }
        }
        out
    };
    let adjoint = move |c: &[f64]| {
        let off = n * (n - 1);
        let mut out = vec![0.0; 2 * n * (n - 1)];
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                let z = c[i * (n - 1) + j] / h;
                out[off + (i + 1) * (n - 1) + j] += z;
                out[off + i * (n - 1) + j] -= z;
                out[i * n + j + 1] -= z;
                out[i * n + j] += z;
            }
        }
        out
    };
    OperatorHandle::new(2 * n * (n - 1), (n - 1) * (n - 1), forward, adjoint)
}

/// Apply the gradient's pseudo-inverse to a field `v`: solve the normal
/// equations `(D* D) u = D* v` by conjugate gradients restricted to the
/// zero-mean complement of the constant kernel. The returned `x` is the
/// zero-mean representative `D^+ v`.
pub fn apply_pseudo_inverse(
    dh: &OperatorHandle,
    v: &[f64],
    cg: &CgSettings,
) -> CgOutcome {
    let nodes = dh.in_dim();
    let normal = {
        let dh = dh.clone();
        OperatorHandle::new(nodes, nodes, move |x| dh.apply_adjoint(&dh.apply(x)), {
            // normal operator is symmetric
            move |_: &[f64]| unreachable!("cg never applies the adjoint")
        })
    };
    let rhs = dh.apply_adjoint(v);
    cg_solve_projected(&normal, &rhs, cg, &vec![0.0; nodes], project_zero_mean)
}

/// Apply the adjoint of the pseudo-inverse to a grid function `u`: solve
/// `(D D*) w = D u` by conjugate gradients started at zero, whose Krylov
/// space stays inside the range of `D` (the orthogonal complement of the
/// system's kernel) for this consistent right-hand side.
pub fn apply_pseudo_inverse_adjoint(
    dh: &OperatorHandle,
    u: &[f64],
    cg: &CgSettings,
) -> CgOutcome {
    let len = dh.out_dim();
    let gram = {
        let dh = dh.clone();
        OperatorHandle::new(len, len, move |y| dh.apply(&dh.apply_adjoint(y)), {
            move |_: &[f64]| unreachable!("cg never applies the adjoint")
        })
    };
    let rhs = dh.apply(u);
    cg_solve(&gram, &rhs, cg, &vec![0.0; len])
}

fn project_zero_mean(x: &mut [f64]) {
    if x.is_empty() {
        return;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    for xi in x.iter_mut() {
        *xi -= mean;
    }
}
