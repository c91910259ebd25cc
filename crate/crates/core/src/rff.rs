//! Random Fourier features and the two-level product-kernel approximation.
//!
//! A map of dimension D for a Gaussian kernel with bandwidth σ draws
//! frequencies `Ω ~ Normal(0, 1/σ²)` and phases `b ~ Uniform[0, 2π)`, and
//! features a point as `z(x) = √(2/D)·cos(Ωx + b)`, so that
//! `z(x)ᵀz(y) ≈ exp(−‖x−y‖²/2σ²)` (the single-cosine, random-phase
//! construction).
//!
//! The extended feature space is approximated in two levels:
//! 1. the `k_x'` map turns a task sample into the empirical embedding
//!    vector `μ̂ = mean_j z_{x'}(x_j)`, a finite-dimensional stand-in for
//!    the kernel mean embedding, with `‖μ̂_A − μ̂_B‖² ≈ mmd²(A, B)`;
//! 2. a second map treats `κ` as a Gaussian kernel on those embedding
//!    vectors, and its features are combined with the features of `k_x` by
//!    a Kronecker product, mirroring how the feature map of a product
//!    kernel is the tensor product of the factor maps.

use std::io::{BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::data::TaskDataset;
use crate::error::{Error, Result};
use crate::rng::child_rng;

/// A sampled random Fourier feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct RffMap {
    /// D × d_in frequency matrix.
    pub omega: Array2<f64>,
    /// Length-D phase vector in `[0, 2π)`.
    pub b: Array1<f64>,
    /// Bandwidth of the approximated Gaussian kernel.
    pub sigma: f64,
}

impl RffMap {
    /// Feature count D.
    pub fn feature_dim(&self) -> usize {
        self.omega.nrows()
    }

    /// Input dimension.
    pub fn input_dim(&self) -> usize {
        self.omega.ncols()
    }
}

/// Sample a map for a Gaussian kernel of bandwidth `sigma` on `d_in`
/// dimensions. Frequencies are drawn row-major, then phases; the stream is
/// `child_rng(seed, 0)`, so the same seed always yields the same map.
pub fn sample_rff(d_in: usize, d_features: usize, sigma: f64, seed: u64) -> Result<RffMap> {
    if d_in < 1 || d_features < 1 {
        return Err(Error::InvalidParam("dimensions must be >= 1".into()));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParam(format!("sigma must be positive, got {sigma}")));
    }
    let mut rng = child_rng(seed, 0);
    let normal = Normal::new(0.0, 1.0 / sigma).expect("valid std");
    let mut omega = Vec::with_capacity(d_features * d_in);
    for _ in 0..d_features * d_in {
        omega.push(normal.sample(&mut rng));
    }
    let b: Vec<f64> = (0..d_features)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();
    Ok(RffMap {
        omega: Array2::from_shape_vec((d_features, d_in), omega).expect("shape"),
        b: Array1::from_vec(b),
        sigma,
    })
}

/// Evaluate `z(x) = √(2/D)·cos(Ωx + b)`.
pub fn features(map: &RffMap, x: ArrayView1<f64>) -> Result<Array1<f64>> {
    if x.len() != map.input_dim() {
        return Err(Error::DimensionMismatch(x.len(), map.input_dim()));
    }
    let d = map.feature_dim();
    let scale = (2.0 / d as f64).sqrt();
    let mut z = map.omega.dot(&x);
    z.iter_mut().zip(map.b.iter()).for_each(|(v, &phase)| *v = scale * (*v + phase).cos());
    Ok(z)
}

/// Feature every row of a matrix: returns n × D.
pub fn features_matrix(map: &RffMap, x: &Array2<f64>) -> Result<Array2<f64>> {
    if x.ncols() != map.input_dim() {
        return Err(Error::DimensionMismatch(x.ncols(), map.input_dim()));
    }
    let d = map.feature_dim();
    let scale = (2.0 / d as f64).sqrt();
    let mut z = x.dot(&map.omega.t());
    for mut row in z.rows_mut() {
        row.iter_mut().zip(map.b.iter()).for_each(|(v, &phase)| *v = scale * (*v + phase).cos());
    }
    Ok(z)
}

/// Empirical embedding of a task: the mean of `z_{x'}` over its points.
pub fn embed_task(map_xp: &RffMap, task: &TaskDataset) -> Result<Array1<f64>> {
    if task.is_empty() {
        return Err(Error::EmptyInput("task"));
    }
    embed_points(map_xp, &task.x)
}

/// Empirical embedding of a bare point matrix (used at test time, where a
/// task's labels must not be touched).
pub fn embed_points(map_xp: &RffMap, x: &Array2<f64>) -> Result<Array1<f64>> {
    if x.nrows() == 0 {
        return Err(Error::EmptyInput("points"));
    }
    let z = features_matrix(map_xp, x)?;
    Ok(&z.sum_axis(ndarray::Axis(0)) / x.nrows() as f64)
}

/// A task embedding paired with one of the task's points.
#[derive(Debug, Clone)]
pub struct EmbeddedPoint {
    /// Empirical embedding of the task under the `k_x'` map.
    pub mu_hat: Array1<f64>,
    /// The input point.
    pub x: Array1<f64>,
}

/// Extended feature of an embedded point: `z_κ(μ̂) ⊗ z_x(x)`, indexed with
/// the κ-feature as the outer (slow) axis.
pub fn extended_features(map_kappa: &RffMap, map_x: &RffMap, ep: &EmbeddedPoint) -> Result<Array1<f64>> {
    if ep.mu_hat.len() != map_kappa.input_dim() {
        return Err(Error::DimensionMismatch(ep.mu_hat.len(), map_kappa.input_dim()));
    }
    if ep.x.len() != map_x.input_dim() {
        return Err(Error::DimensionMismatch(ep.x.len(), map_x.input_dim()));
    }
    let zk = features(map_kappa, ep.mu_hat.view())?;
    let zx = features(map_x, ep.x.view())?;
    let mut out = Array1::zeros(zk.len() * zx.len());
    for (i, &a) in zk.iter().enumerate() {
        for (j, &b) in zx.iter().enumerate() {
            out[i * zx.len() + j] = a * b;
        }
    }
    Ok(out)
}

const SNAPSHOT_MAGIC: &[u8; 4] = b"RFFM";
const SNAPSHOT_VERSION: u32 = 1;

/// Write a map snapshot (versioned header, little-endian f64 payload) so
/// separate train and predict runs can share sampled maps.
pub fn save_map(path: impl AsRef<Path>, map: &RffMap) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path.as_ref())?);
    write_map(&mut w, map)?;
    w.flush()?;
    Ok(())
}

pub(crate) fn write_map(w: &mut impl Write, map: &RffMap) -> Result<()> {
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    w.write_all(&(map.feature_dim() as u64).to_le_bytes())?;
    w.write_all(&(map.input_dim() as u64).to_le_bytes())?;
    w.write_all(&map.sigma.to_le_bytes())?;
    for v in map.omega.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in map.b.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Load a map snapshot written by [`save_map`].
pub fn load_map(path: impl AsRef<Path>) -> Result<RffMap> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path.as_ref())?);
    read_map(&mut r)
}

pub(crate) fn read_map(r: &mut impl Read) -> Result<RffMap> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Format("bad RFF snapshot magic".into()));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let version = u32::from_le_bytes(u32buf);
    if version != SNAPSHOT_VERSION {
        return Err(Error::Format(format!("unsupported RFF snapshot version {version}")));
    }
    let mut u64buf = [0u8; 8];
    r.read_exact(&mut u64buf)?;
    let d_features = u64::from_le_bytes(u64buf) as usize;
    r.read_exact(&mut u64buf)?;
    let d_in = u64::from_le_bytes(u64buf) as usize;
    r.read_exact(&mut u64buf)?;
    let sigma = f64::from_le_bytes(u64buf);
    let mut read_f64s = |count: usize| -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(count);
        let mut buf = [0u8; 8];
        for _ in 0..count {
            r.read_exact(&mut buf)?;
            out.push(f64::from_le_bytes(buf));
        }
        Ok(out)
    };
    let omega = read_f64s(d_features * d_in)?;
    let b = read_f64s(d_features)?;
    Ok(RffMap {
        omega: Array2::from_shape_vec((d_features, d_in), omega)
            .map_err(|e| Error::Format(format!("snapshot shape: {e}")))?,
        b: Array1::from_vec(b),
        sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generate_synthetic;
    use crate::kernels;
    use crate::rng::rng_from;
    use ndarray::Array1;

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_rff(3, 64, 0.9, 123).unwrap();
        let b = sample_rff(3, 64, 0.9, 123).unwrap();
        assert_eq!(a, b);
        let c = sample_rff(3, 64, 0.9, 124).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn phases_in_range_and_frequency_mean_near_zero() {
        let d_in = 10;
        let d = 10_000;
        let map = sample_rff(d_in, d, 1.0, 5).unwrap();
        assert!(map.b.iter().all(|&p| (0.0..std::f64::consts::TAU).contains(&p)));
        let mean = map.omega.iter().sum::<f64>() / (d * d_in) as f64;
        let tol = 4.0 / ((d * d_in) as f64).sqrt();
        assert!(mean.abs() <= tol, "frequency mean {mean} beyond {tol}");
    }

    #[test]
    fn feature_coordinates_and_norm_bounded() {
        let map = sample_rff(4, 32, 1.0, 7).unwrap();
        let x = Array1::from_vec(vec![0.1, -0.4, 2.0, 0.0]);
        let z = features(&map, x.view()).unwrap();
        let bound = (2.0 / 32.0f64).sqrt();
        assert!(z.iter().all(|&v| v.abs() <= bound + 1e-15));
        assert!(z.dot(&z) <= 2.0 + 1e-12);
    }

    #[test]
    fn inner_products_approximate_gauss() {
        let mut rng = rng_from(2024);
        let d_in = 10;
        let sigma = 1.0;
        let map = sample_rff(d_in, 4096, sigma, 11).unwrap();
        let points: Vec<Array1<f64>> = (0..50)
            .map(|_| Array1::from_iter((0..d_in).map(|_| rng.random_range(0.0..1.0))))
            .collect();
        let feats: Vec<Array1<f64>> = points.iter().map(|p| features(&map, p.view()).unwrap()).collect();
        let mut max_err = 0.0f64;
        for i in 0..points.len() {
            for j in 0..points.len() {
                let exact = kernels::gauss(
                    points[i].as_slice().unwrap(),
                    points[j].as_slice().unwrap(),
                    sigma,
                )
                .unwrap();
                let approx = feats[i].dot(&feats[j]);
                max_err = max_err.max((exact - approx).abs());
            }
        }
        assert!(max_err <= 0.05, "max |z·z − k| = {max_err}");
    }

    #[test]
    fn unbiased_over_independent_maps() {
        let x = Array1::from_vec(vec![0.2, 0.8, 0.5]);
        let y = Array1::from_vec(vec![0.9, 0.1, 0.4]);
        let sigma = 0.8;
        let exact = kernels::gauss(x.as_slice().unwrap(), y.as_slice().unwrap(), sigma).unwrap();
        let reps = 64;
        let estimates: Vec<f64> = (0..reps)
            .map(|k| {
                let map = sample_rff(3, 128, sigma, 9000 + k).unwrap();
                features(&map, x.view()).unwrap().dot(&features(&map, y.view()).unwrap())
            })
            .collect();
        let mean = estimates.iter().sum::<f64>() / reps as f64;
        let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let margin = 3.0 * (var / reps as f64).sqrt();
        assert!(
            (mean - exact).abs() <= margin,
            "mean {mean} vs exact {exact}, margin {margin}"
        );
    }

    #[test]
    fn embedding_mean_and_duplication_invariance() {
        let map = sample_rff(2, 64, 1.0, 3).unwrap();
        let coll = generate_synthetic(1, 1, 8).unwrap();
        let single = &coll.tasks[0];
        let mu = embed_task(&map, single).unwrap();
        let z = features(&map, single.x.row(0)).unwrap();
        assert!(mu.iter().zip(z.iter()).all(|(a, b)| (a - b).abs() < 1e-15));

        let coll = generate_synthetic(1, 20, 9).unwrap();
        let task = &coll.tasks[0];
        let mu = embed_task(&map, task).unwrap();
        let doubled = {
            let mut rows = task.x.clone().into_raw_vec_and_offset().0;
            rows.extend(rows.clone());
            TaskDataset::new(0, Array2::from_shape_vec((40, 2), rows).unwrap(), vec![0; 40]).unwrap()
        };
        let mu2 = embed_task(&map, &doubled).unwrap();
        assert!(mu.iter().zip(mu2.iter()).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn embedding_distance_tracks_mmd() {
        let sigma = 0.7;
        let map = sample_rff(2, 4096, sigma, 17).unwrap();
        let coll = generate_synthetic(4, 15, 33).unwrap();
        for i in 0..coll.len() {
            for j in 0..coll.len() {
                let exact = kernels::mmd_sq(&coll.tasks[i], &coll.tasks[j], sigma).unwrap();
                let mi = embed_task(&map, &coll.tasks[i]).unwrap();
                let mj = embed_task(&map, &coll.tasks[j]).unwrap();
                let diff = &mi - &mj;
                let approx = diff.dot(&diff);
                assert!(
                    (approx - exact).abs() <= 0.05,
                    "tasks {i},{j}: |{approx} − {exact}| > 0.05"
                );
            }
        }
    }

    #[test]
    fn kronecker_inner_product_factorizes() {
        let map_k = sample_rff(8, 16, 1.0, 1).unwrap();
        let map_x = sample_rff(3, 8, 0.5, 2).unwrap();
        let mut rng = rng_from(6);
        let mk = |rng: &mut rand_chacha::ChaCha8Rng, n: usize| {
            Array1::from_iter((0..n).map(|_| rng.random_range(-1.0..1.0)))
        };
        let a = EmbeddedPoint { mu_hat: mk(&mut rng, 8), x: mk(&mut rng, 3) };
        let b = EmbeddedPoint { mu_hat: mk(&mut rng, 8), x: mk(&mut rng, 3) };
        let ea = extended_features(&map_k, &map_x, &a).unwrap();
        let eb = extended_features(&map_k, &map_x, &b).unwrap();
        let lhs = ea.dot(&eb);
        let rhs = features(&map_k, a.mu_hat.view()).unwrap().dot(&features(&map_k, b.mu_hat.view()).unwrap())
            * features(&map_x, a.x.view()).unwrap().dot(&features(&map_x, b.x.view()).unwrap());
        assert!((lhs - rhs).abs() < 1e-12);
        assert!(ea.dot(&ea) <= 4.0 + 1e-12);
    }

    #[test]
    fn two_level_error_shrinks_as_dims_double() {
        let coll = generate_synthetic(5, 12, 55).unwrap();
        let cfg = kernels::KernelConfig::new(0.6, 0.8, 0.9).unwrap();
        let median_err = |d: usize| -> f64 {
            let map_xp = sample_rff(2, d, cfg.sigma_xp, 101).unwrap();
            let map_k = sample_rff(d, d, cfg.sigma_kappa, 102).unwrap();
            let map_x = sample_rff(2, d, cfg.sigma_x, 103).unwrap();
            let mus: Vec<Array1<f64>> =
                coll.tasks.iter().map(|t| embed_task(&map_xp, t).unwrap()).collect();
            let zks: Vec<Array1<f64>> =
                mus.iter().map(|m| features(&map_k, m.view()).unwrap()).collect();
            let mut errs = Vec::new();
            for (i, ti) in coll.tasks.iter().enumerate() {
                for (j, tj) in coll.tasks.iter().enumerate() {
                    let zxi = features(&map_x, ti.x.row(0)).unwrap();
                    let zxj = features(&map_x, tj.x.row(0)).unwrap();
                    let approx = zks[i].dot(&zks[j]) * zxi.dot(&zxj);
                    let exact = kernels::kbar(
                        ti,
                        ti.x.row(0).to_slice().unwrap(),
                        tj,
                        tj.x.row(0).to_slice().unwrap(),
                        &cfg,
                    )
                    .unwrap();
                    errs.push((approx - exact).abs());
                }
            }
            errs.sort_by(|a, b| a.total_cmp(b));
            errs[errs.len() / 2]
        };
        let e256 = median_err(256);
        let e1024 = median_err(1024);
        let e4096 = median_err(4096);
        assert!(e1024 < e256, "median err 1024 {e1024} !< 256 {e256}");
        assert!(e4096 < e256, "median err 4096 {e4096} !< 256 {e256}");
    }

    #[test]
    fn snapshot_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let map = sample_rff(5, 37, 1.3, 77).unwrap();
        let path = dir.path().join("map.rff");
        save_map(&path, &map).unwrap();
        let loaded = load_map(&path).unwrap();
        assert_eq!(map, loaded);
    }

    #[test]
    fn snapshot_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.rff");
        std::fs::write(&path, b"NOPE0000").unwrap();
        assert!(matches!(load_map(&path), Err(Error::Format(_))));
    }

    #[test]
    fn features_reject_dimension_mismatch() {
        let map = sample_rff(3, 8, 1.0, 0).unwrap();
        let x = Array1::zeros(4);
        assert!(features(&map, x.view()).is_err());
    }
}
