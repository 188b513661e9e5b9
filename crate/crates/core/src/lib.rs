//! Solver toolkit for linearly constrained nonsmooth and nonconvex
//! minimization in Euclidean spaces.
//!
//! The central algorithm is a nested double-loop iteration: the outer loop
//! re-centers a quadratic perturbation `omega * ||v - u||^2` of the objective
//! around the previous iterate, and the inner loop runs an augmented
//! Lagrangian (Bregman) multiplier iteration on the resulting strongly convex
//! subproblem, stopped adaptively. For separable objectives of the form
//! `||T v - g||^2 + gamma * sum_k U_k(v_k)` the inner minimizations reduce to
//! a componentwise thresholding fixed-point iteration with a guaranteed
//! contraction rate.
//!
//! Modules:
//! - [`linalg`]: matrix-free operators, conjugate gradients, norm estimation
//! - [`potentials`]: truncated power potentials and their C^1 smoothing
//! - [`thresholding`]: the scalar proximity map of the smoothed potential
//! - [`inner`]: thresholding fixed point and the multiplier loop
//! - [`solver`]: outer loop, rescaling, stopping, criticality diagnostics
//! - [`problems`]: Mumford-Shah denoising, brittle and cohesive fracture

pub mod error;
pub mod inner;
pub mod linalg;
pub mod potentials;
pub mod problems;
pub mod solver;
pub mod thresholding;

pub use error::{Error, Result};
pub use linalg::{CgSettings, OperatorHandle};
pub use potentials::SmoothedPotential;
pub use problems::ConstrainedProblem;
pub use solver::{SolveResult, SolveStatus, SolverConfig};
