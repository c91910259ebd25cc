//! Kernel-based multiclass domain generalization.
//!
//! A task (or domain) is a joint distribution on features and labels. Given
//! labeled samples from several tasks drawn from a common meta-distribution,
//! the goal is to label a fresh, unseen task from its unlabeled sample alone.
//!
//! The learner works on the extended feature space of pairs
//! (task marginal, input point). A task marginal enters through its kernel
//! mean embedding, distributions are compared with the maximum mean
//! discrepancy, and the extended space carries the product kernel
//! `κ(Φ(P), Φ(Q)) · k_x(x, x')`. Training scales through a two-level random
//! Fourier feature approximation of that product kernel.
//!
//! Modules:
//! - [`data`]: task collections (synthetic rotated tasks, rotated image
//!   pools, a generic on-disk format).
//! - [`kernels`]: exact Gaussian kernels, empirical MMD, and the extended
//!   Gram matrix.
//! - [`rff`]: random Fourier feature maps and the two-level approximation.
//! - [`losses`]: multiclass surrogate losses with subgradients and
//!   Lipschitz constants.
//! - [`solver`]: deterministic full-batch training on explicit features or
//!   on the exact extended Gram.
//! - [`dg`]: the end-to-end pipeline (fit, predict, pooling baseline,
//!   task-level cross-validation, benchmarks).
//! - [`bound`]: the estimation-error bound calculator and its Monte Carlo
//!   concentration check.

pub mod bound;
pub mod data;
pub mod dg;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod losses;
pub mod rff;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
