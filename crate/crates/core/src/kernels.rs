//! Exact kernels on inputs, tasks, and the extended feature space.
//!
//! Three Gaussian(-like) kernels cooperate:
//! - `k_x(x, x') = exp(−‖x−x'‖² / 2σ_x²)` on input points,
//! - `k_x'` with bandwidth `σ_x'`, which defines the kernel mean embedding
//!   `Φ(P̂) = (1/n) Σ_j k_x'(x_j, ·)` of a task's empirical marginal,
//! - `κ(Φ(P), Φ(Q)) = exp(−‖Φ(P)−Φ(Q)‖² / 2σ_κ²)` on embeddings.
//!
//! The squared embedding distance `‖Φ(P̂_A)−Φ(P̂_B)‖²` is the (biased)
//! empirical MMD², computable from three kernel sums. The extended feature
//! space of pairs (marginal, point) carries the product kernel
//! `k̄ = κ · k_x`, whose Gram matrix over a collection feeds the exact
//! (non-RFF) trainer.
//!
//! With these choices every kernel value lies in `(0, 1]`, so the bound
//! module's defaults `B_k = B_k' = B_κ = 1` hold.

use ndarray::Array2;
use rayon::prelude::*;

use crate::data::{DomainCollection, TaskDataset};
use crate::error::{Error, Result};

/// Bandwidths of the three kernels.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KernelConfig {
    /// Bandwidth of `k_x` on input points.
    pub sigma_x: f64,
    /// Bandwidth of `k_x'` under the mean embedding.
    pub sigma_xp: f64,
    /// Bandwidth of `κ` on embeddings.
    pub sigma_kappa: f64,
}

impl KernelConfig {
    pub fn new(sigma_x: f64, sigma_xp: f64, sigma_kappa: f64) -> Result<Self> {
        for (name, v) in [("sigma_x", sigma_x), ("sigma_xp", sigma_xp), ("sigma_kappa", sigma_kappa)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParam(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(Self { sigma_x, sigma_xp, sigma_kappa })
    }
}

/// Default cap on total points for assembling the exact extended Gram.
pub const DEFAULT_GRAM_CAP: usize = 4096;

/// Gaussian kernel `exp(−‖x−y‖² / 2σ²)`.
pub fn gauss(x: &[f64], y: &[f64], sigma: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(x.len(), y.len()));
    }
    Ok(gauss_unchecked(x, y, sigma))
}

#[inline]
fn gauss_unchecked(x: &[f64], y: &[f64], sigma: f64) -> f64 {
    let mut sq = 0.0;
    for (a, b) in x.iter().zip(y) {
        let d = a - b;
        sq += d * d;
    }
    (-sq / (2.0 * sigma * sigma)).exp()
}

/// Fix an orientation for a task pair so that sums over pairs of points are
/// accumulated in the same order regardless of argument order (keeps
/// [`mmd_sq`] bitwise symmetric).
fn in_canonical_order(a: &TaskDataset, b: &TaskDataset) -> bool {
    match a.len().cmp(&b.len()) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => {
            for (u, v) in a.x.iter().zip(b.x.iter()) {
                match u.total_cmp(v) {
                    std::cmp::Ordering::Less => return true,
                    std::cmp::Ordering::Greater => return false,
                    std::cmp::Ordering::Equal => {}
                }
            }
            true
        }
    }
}

/// Squared empirical MMD between two tasks under `k_x'`:
/// `‖Φ(P̂_A) − Φ(P̂_B)‖²` expanded into within- and cross-sample kernel sums.
///
/// Tiny negative values from floating-point cancellation (≥ −1e-12) are
/// clamped to zero.
pub fn mmd_sq(a: &TaskDataset, b: &TaskDataset, sigma_xp: f64) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    let (first, second) = if in_canonical_order(a, b) { (a, b) } else { (b, a) };
    let na = first.len() as f64;
    let nb = second.len() as f64;
    let rows_a: Vec<&[f64]> = first.x.rows().into_iter().map(|r| r.to_slice().unwrap()).collect();
    let rows_b: Vec<&[f64]> = second.x.rows().into_iter().map(|r| r.to_slice().unwrap()).collect();
    let mut s_aa = 0.0;
    for ri in &rows_a {
        for rj in &rows_a {
            s_aa += gauss_unchecked(ri, rj, sigma_xp);
        }
    }
    let mut s_bb = 0.0;
    for ri in &rows_b {
        for rj in &rows_b {
            s_bb += gauss_unchecked(ri, rj, sigma_xp);
        }
    }
    let mut s_ab = 0.0;
    for ri in &rows_a {
        for rj in &rows_b {
            s_ab += gauss_unchecked(ri, rj, sigma_xp);
        }
    }
    let v = s_aa / (na * na) + s_bb / (nb * nb) - 2.0 * s_ab / (na * nb);
    debug_assert!(v >= -1e-12, "mmd_sq produced {v}");
    Ok(if v < 0.0 { 0.0 } else { v })
}

/// Gaussian-like task kernel on empirical embeddings:
/// `exp(−mmd²(A,B) / 2σ_κ²)`.
pub fn kappa_emp(a: &TaskDataset, b: &TaskDataset, config: &KernelConfig) -> Result<f64> {
    let m = mmd_sq(a, b, config.sigma_xp)?;
    Ok((-m / (2.0 * config.sigma_kappa * config.sigma_kappa)).exp())
}

/// Product kernel on the extended feature space:
/// `k̄((A, x_a), (B, x_b)) = κ(Φ(P̂_A), Φ(P̂_B)) · k_x(x_a, x_b)`.
pub fn kbar(
    a: &TaskDataset,
    x_a: &[f64],
    b: &TaskDataset,
    x_b: &[f64],
    config: &KernelConfig,
) -> Result<f64> {
    let k_task = kappa_emp(a, b, config)?;
    let k_point = gauss(x_a, x_b, config.sigma_x)?;
    Ok(k_task * k_point)
}

/// Extended Gram matrix over every point of every task, ordered task-major.
///
/// Entry ((i,j), (i',j')) = `k̄((task_i, x_ij), (task_i', x_i'j'))`. The task
/// kernel `κ` is computed once per unordered task pair. Rejects collections
/// with more than `cap` total points.
pub fn gram_extended(collection: &DomainCollection, config: &KernelConfig, cap: usize) -> Result<Array2<f64>> {
    if collection.is_empty() {
        return Err(Error::EmptyInput("collection"));
    }
    let m: usize = collection.total_points();
    if m > cap {
        return Err(Error::TooLarge { actual: m, cap });
    }
    let n_tasks = collection.len();

    // κ once per unordered task pair
    let pairs: Vec<(usize, usize)> = (0..n_tasks)
        .flat_map(|i| (i..n_tasks).map(move |j| (i, j)))
        .collect();
    let kappa_vals: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| kappa_emp(&collection.tasks[i], &collection.tasks[j], config))
        .collect::<Result<_>>()?;
    let mut kappa = Array2::zeros((n_tasks, n_tasks));
    for (&(i, j), &v) in pairs.iter().zip(&kappa_vals) {
        kappa[[i, j]] = v;
        kappa[[j, i]] = v;
    }

    // flat index -> (task, row)
    let mut owner = Vec::with_capacity(m);
    for (ti, task) in collection.tasks.iter().enumerate() {
        for j in 0..task.len() {
            owner.push((ti, j));
        }
    }

    let sigma_x = config.sigma_x;
    let upper: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|r| {
            let (ti, tj) = owner[r];
            let xi = collection.tasks[ti].x.row(tj);
            let xi = xi.to_slice().unwrap();
            (r..m)
                .map(|s| {
                    let (ui, uj) = owner[s];
                    let xu = collection.tasks[ui].x.row(uj);
                    kappa[[ti, ui]] * gauss_unchecked(xi, xu.to_slice().unwrap(), sigma_x)
                })
                .collect()
        })
        .collect();

    let mut gram = Array2::zeros((m, m));
    for (r, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let s = r + off;
            gram[[r, s]] = v;
            gram[[s, r]] = v;
        }
    }
    Ok(gram)
}
