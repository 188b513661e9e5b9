//! Vectors, matrix-free linear operators, conjugate gradients, and operator
//! norm estimation.
//!
//! Operators are closures with an explicit adjoint; nothing here assembles a
//! matrix except [`DenseMatrix`], which backs small explicit instances (CLI
//! input, adjoint pairs built from data).

use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Vector helpers
// ---------------------------------------------------------------------------

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `a - b` componentwise.
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Euclidean distance between two vectors.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `y += alpha * x` in place.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

pub fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Deterministic unit vector drawn from the given RNG; zero-length inputs
/// yield an empty vector.
fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    if dim == 0 {
        return Vec::new();
    }
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let n = norm(&v);
        if n > 1e-8 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

// ---------------------------------------------------------------------------
// Operator handles
// ---------------------------------------------------------------------------

type ApplyFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A matrix-free linear map with an explicit adjoint and a lazily computed
/// operator-norm estimate. Immutable after construction; cloning shares the
/// underlying closures.
#[derive(Clone)]
pub struct OperatorHandle {
    in_dim: usize,
    out_dim: usize,
    forward: ApplyFn,
    adjoint: ApplyFn,
    norm_estimate: Arc<OnceLock<f64>>,
}

impl OperatorHandle {
    pub fn new<F, G>(in_dim: usize, out_dim: usize, forward: F, adjoint: G) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        OperatorHandle {
            in_dim,
            out_dim,
            forward: Arc::new(forward),
            adjoint: Arc::new(adjoint),
            norm_estimate: Arc::new(OnceLock::new()),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.in_dim, "operator input dimension");
        let y = (self.forward)(x);
        debug_assert_eq!(y.len(), self.out_dim);
        y
    }

    pub fn apply_adjoint(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.out_dim, "operator adjoint input dimension");
        let x = (self.adjoint)(y);
        debug_assert_eq!(x.len(), self.in_dim);
        x
    }

    /// Cached operator-norm estimate. First use runs a seeded power iteration
    /// (400 rounds); builders that know the norm can pre-seed the cache with
    /// [`with_norm_hint`](Self::with_norm_hint).
    pub fn norm_est(&self) -> f64 {
        *self
            .norm_estimate
            .get_or_init(|| estimate_norm(self, 400, 0x9e37_79b9))
    }

    /// Pre-populate the norm cache (e.g. for operators with a known norm).
    pub fn with_norm_hint(self, norm: f64) -> Self {
        let _ = self.norm_estimate.set(norm);
        self
    }

    /// The identity on `R^n`.
    pub fn identity(n: usize) -> Self {
        OperatorHandle::new(n, n, |x| x.to_vec(), |y| y.to_vec()).with_norm_hint(1.0)
    }

    /// `s * I` on `R^n`.
    pub fn scaled_identity(n: usize, s: f64) -> Self {
        OperatorHandle::new(
            n,
            n,
            move |x| x.iter().map(|v| s * v).collect(),
            move |y| y.iter().map(|v| s * v).collect(),
        )
        .with_norm_hint(s.abs())
    }

    /// The zero map `R^m -> R^0`; used when a problem has no fidelity term.
    pub fn zero_map(in_dim: usize) -> Self {
        OperatorHandle::new(in_dim, 0, |_| Vec::new(), move |_| vec![0.0; in_dim])
            .with_norm_hint(0.0)
    }

    /// Wrap a dense matrix as an operator.
    pub fn from_dense(m: DenseMatrix) -> Self {
        let m = Arc::new(m);
        let m2 = Arc::clone(&m);
        OperatorHandle::new(
            m.cols(),
            m.rows(),
            move |x| m.matvec(x),
            move |y| m2.matvec_t(y),
        )
    }

    /// `s * self`, with the norm cache scaled along when already available.
    pub fn scaled(&self, s: f64) -> Self {
        let fwd = Arc::clone(&self.forward);
        let adj = Arc::clone(&self.adjoint);
        let out = OperatorHandle::new(
            self.in_dim,
            self.out_dim,
            move |x| {
                let mut y = fwd(x);
                scale(s, &mut y);
                y
            },
            move |y| {
                let mut x = adj(y);
                scale(s, &mut x);
                x
            },
        );
        if let Some(n) = self.norm_estimate.get() {
            out.with_norm_hint(n * s.abs())
        } else {
            out
        }
    }
}

impl std::fmt::Debug for OperatorHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OperatorHandle")
            .field("in_dim", &self.in_dim)
            .field("out_dim", &self.out_dim)
            .field("norm_estimate", &self.norm_estimate.get())
            .finish()
    }
}

// ---------------------------------------------------------------------------
// Dense matrices (small explicit instances and CLI input)
// ---------------------------------------------------------------------------

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "dense matrix data",
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| dot(&self.data[i * self.cols..(i + 1) * self.cols], x))
            .collect()
    }

    pub fn matvec_t(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        let mut x = vec![0.0; self.cols];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            axpy(y[i], row, &mut x);
        }
        x
    }
}

// ---------------------------------------------------------------------------
// Adjoint consistency check
// ---------------------------------------------------------------------------

/// Maximum discrepancy `|<A x, y> - <x, A* y>|` over `trials` random unit
/// pairs. Deterministic for a given seed.
pub fn adjoint_check(op: &OperatorHandle, trials: usize, seed: u64) -> f64 {
    assert!(trials >= 1, "adjoint_check requires at least one trial");
    if op.in_dim() == 0 || op.out_dim() == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let x = random_unit(&mut rng, op.in_dim());
        let y = random_unit(&mut rng, op.out_dim());
        let lhs = dot(&op.apply(&x), &y);
        let rhs = dot(&x, &op.apply_adjoint(&y));
        worst = worst.max((lhs - rhs).abs());
    }
    worst
}

// ---------------------------------------------------------------------------
// Operator norm estimation
// ---------------------------------------------------------------------------

/// Power iteration on `op . op*`; returns an estimate of `||op||` from below
/// (a Rayleigh quotient). Deterministic for a given seed; the zero operator
/// and zero-dimensional maps return 0.
pub fn estimate_norm(op: &OperatorHandle, iters: usize, seed: u64) -> f64 {
    assert!(iters >= 1, "estimate_norm requires at least one iteration");
    if op.in_dim() == 0 || op.out_dim() == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = random_unit(&mut rng, op.out_dim());
    let mut lambda = 0.0f64;
    for _ in 0..iters {
        let y = op.apply(&op.apply_adjoint(&z));
        lambda = dot(&z, &y); // Rayleigh quotient, z has unit norm
        let ny = norm(&y);
        if ny == 0.0 {
            return 0.0;
        }
        z = y.into_iter().map(|v| v / ny).collect();
    }
    lambda.max(0.0).sqrt()
}

// ---------------------------------------------------------------------------
// Conjugate gradients
// ---------------------------------------------------------------------------

/// Conjugate gradient stopping parameters: relative residual and iteration
/// cap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl CgSettings {
    pub fn new(tol: f64, max_iter: usize) -> Result<Self> {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cg tolerance must lie in (0, 1), got {tol}"
            )));
        }
        if max_iter == 0 {
            return Err(Error::InvalidParameter(
                "cg max_iter must be at least 1".into(),
            ));
        }
        Ok(CgSettings { tol, max_iter })
    }
}

impl Default for CgSettings {
    fn default() -> Self {
        CgSettings {
            tol: 1e-10,
            max_iter: 2000,
        }
    }
}

/// Outcome of a conjugate gradient solve. `converged` is false when the
/// iteration cap was reached; `final_residual` always carries the last
/// residual norm so callers can decide what to do with a flagged result.
#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    /// Residual norms per iteration, starting with the initial residual.
    pub residual_norms: Vec<f64>,
}

/// Plain CG for symmetric positive (semi)definite operators.
pub fn cg_solve(
    op_spd: &OperatorHandle,
    rhs: &[f64],
    settings: &CgSettings,
    x0: &[f64],
) -> CgOutcome {
    cg_solve_projected(op_spd, rhs, settings, x0, |_| {})
}

/// CG restricted to a subspace via a projection applied to the right-hand
/// side and to every residual. Used for singular consistent systems (the
/// grid Laplacian with its constant kernel is solved in the zero-mean
/// complement this way).
pub fn cg_solve_projected<P>(
    op_spd: &OperatorHandle,
    rhs: &[f64],
    settings: &CgSettings,
    x0: &[f64],
    project: P,
) -> CgOutcome
where
    P: Fn(&mut [f64]),
{
    assert_eq!(op_spd.in_dim(), op_spd.out_dim(), "cg needs a square operator");
    assert_eq!(rhs.len(), op_spd.in_dim());
    assert_eq!(x0.len(), op_spd.in_dim());

    let mut b = rhs.to_vec();
    project(&mut b);
    let b_norm = norm(&b);

    let mut x = x0.to_vec();
    project(&mut x);
    let mut r = sub(&b, &op_spd.apply(&x));
    project(&mut r);

    let mut res_norms = vec![norm(&r)];
    if b_norm == 0.0 && res_norms[0] == 0.0 {
        return CgOutcome {
            x,
            converged: true,
            iterations: 0,
            final_residual: 0.0,
            residual_norms: res_norms,
        };
    }
    let threshold = settings.tol * if b_norm > 0.0 { b_norm } else { res_norms[0] };

    let mut p = r.clone();
    let mut rs_old = dot(&r, &r);
    let mut converged = rs_old.sqrt() <= threshold;
    let mut iterations = 0;

    while !converged && iterations < settings.max_iter {
        let ap = op_spd.apply(&p);
        let p_ap = dot(&p, &ap);
        if p_ap.abs() < 1e-300 {
            break; // numerically singular direction
        }
        let alpha = rs_old / p_ap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        project(&mut r);
        let rs_new = dot(&r, &r);
        iterations += 1;
        res_norms.push(rs_new.sqrt());
        if rs_new.sqrt() <= threshold {
            converged = true;
            break;
        }
        let beta = rs_new / rs_old;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rs_old = rs_new;
    }

    let final_residual = *res_norms.last().unwrap();
    CgOutcome {
        x,
        converged,
        iterations,
        final_residual,
        residual_norms: res_norms,
    }
}
