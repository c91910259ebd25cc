//! Task collections: generation, ingestion, splitting.
//!
//! A task is one domain's labeled sample. Collections group tasks that share
//! a feature dimension and class universe; train/test splits happen at the
//! task level, never inside a task.
//!
//! Three sources are supported:
//! - synthetic rotated stripe tasks on the unit square,
//! - rotated image pools (e.g. MNIST via the IDX format),
//! - a generic on-disk format (one CSV per task plus a JSON manifest).
//!
//! All generation is a pure function of (parameters, seed). Task `i` draws
//! from an independent child RNG stream, so per-task generation can run in
//! parallel and a task's content never depends on how many tasks precede it.

use std::io::{BufRead, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{child_rng, rng_from};

/// One domain's sample: feature matrix plus class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskDataset {
    pub task_id: usize,
    /// n × d feature matrix.
    pub x: Array2<f64>,
    /// Class indices in `{0, …, c−1}`, one per row of `x`.
    pub y: Vec<usize>,
    /// Generation parameter when known (rotation angle in degrees).
    pub angle_deg: Option<f64>,
}

impl TaskDataset {
    pub fn new(task_id: usize, x: Array2<f64>, y: Vec<usize>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::EmptyInput("task sample"));
        }
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch(x.nrows(), y.len()));
        }
        Ok(Self { task_id, x, y, angle_deg: None })
    }

    pub fn with_angle(mut self, angle_deg: f64) -> Self {
        self.angle_deg = Some(angle_deg);
        self
    }

    /// Number of points in the task.
    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    /// Feature dimension.
    pub fn dim(&self) -> usize {
        self.x.ncols()
    }
}

/// A collection of tasks sharing dimension `d` and class count `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainCollection {
    pub tasks: Vec<TaskDataset>,
    /// Number of classes.
    pub c: usize,
    /// Feature dimension.
    pub d: usize,
}

impl DomainCollection {
    pub fn new(tasks: Vec<TaskDataset>, c: usize) -> Result<Self> {
        if tasks.is_empty() {
            return Err(Error::EmptyInput("collection"));
        }
        if c < 1 {
            return Err(Error::InvalidParam("class count must be >= 1".into()));
        }
        let d = tasks[0].dim();
        let mut ids = std::collections::HashSet::new();
        for t in &tasks {
            if t.dim() != d {
                return Err(Error::DimensionMismatch(t.dim(), d));
            }
            if !ids.insert(t.task_id) {
                return Err(Error::InvalidParam(format!("duplicate task id {}", t.task_id)));
            }
            for &label in &t.y {
                if label >= c {
                    return Err(Error::LabelOutOfRange { label, classes: c });
                }
            }
        }
        Ok(Self { tasks, c, d })
    }

    /// Number of tasks.
    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    /// Total number of points across tasks.
    pub fn total_points(&self) -> usize {
        self.tasks.iter().map(|t| t.len()).sum()
    }

    /// Labels grouped by task, in task order.
    pub fn labels_by_task(&self) -> Vec<Vec<usize>> {
        self.tasks.iter().map(|t| t.y.clone()).collect()
    }
}

/// Number of classes in the synthetic stripe tasks.
pub const SYNTHETIC_CLASSES: usize = 10;

/// Rotate `(x, y)` clockwise by `theta` radians about the origin.
#[inline]
fn rotate_cw(x: f64, y: f64, theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (x * c + y * s, -x * s + y * c)
}

/// Stripe label of a point on the unit square: tenths of the first
/// coordinate, top edge clipped into the last class.
#[inline]
pub fn stripe_label(x1: f64) -> usize {
    ((x1 * 10.0).floor() as usize).min(SYNTHETIC_CLASSES - 1)
}

/// Generate rotated stripe tasks.
///
/// Each task draws `n_per_task` points uniformly on `[0,1]²`, labels them by
/// tenths of the first coordinate (10 classes), draws one angle
/// `θ ~ Uniform[0°, 180°]`, and rotates every point clockwise by `θ` about
/// the origin. Labels are assigned before rotation, so a task's decision
/// boundary rotates with its support. Rotating about the origin moves the
/// support itself, which is what lets a task's marginal distribution identify
/// its angle.
///
/// Draw order per task stream: the n points (x₁ then x₂ each), then θ.
pub fn generate_synthetic(num_tasks: usize, n_per_task: usize, seed: u64) -> Result<DomainCollection> {
    if num_tasks < 1 || n_per_task < 1 {
        return Err(Error::InvalidParam("num_tasks and n_per_task must be >= 1".into()));
    }
    let tasks: Vec<TaskDataset> = (0..num_tasks)
        .into_par_iter()
        .map(|i| {
            let mut rng = child_rng(seed, i as u64);
            let mut raw = Vec::with_capacity(n_per_task * 2);
            for _ in 0..n_per_task {
                raw.push(rng.random_range(0.0..1.0));
                raw.push(rng.random_range(0.0..1.0));
            }
            let theta_deg: f64 = rng.random_range(0.0..180.0);
            let theta = theta_deg.to_radians();
            let mut x = Array2::zeros((n_per_task, 2));
            let mut y = Vec::with_capacity(n_per_task);
            for j in 0..n_per_task {
                let (px, py) = (raw[2 * j], raw[2 * j + 1]);
                y.push(stripe_label(px));
                let (rx, ry) = rotate_cw(px, py, theta);
                x[[j, 0]] = rx;
                x[[j, 1]] = ry;
            }
            TaskDataset { task_id: i, x, y, angle_deg: Some(theta_deg) }
        })
        .collect();
    DomainCollection::new(tasks, SYNTHETIC_CLASSES)
}

const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
const IDX_LABEL_MAGIC: u32 = 0x0000_0801;

fn read_be_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_be_bytes(buf))
}

/// Read an IDX image file (big-endian, magic 2051).
///
/// Returns an m × (rows·cols) matrix with pixel values scaled into `[0,1]`
/// by dividing by 255, rows in row-major order.
pub fn read_idx_images(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let file = std::fs::File::open(path.as_ref())?;
    let mut r = std::io::BufReader::new(file);
    let magic = read_be_u32(&mut r)?;
    if magic != IDX_IMAGE_MAGIC {
        return Err(Error::Format(format!(
            "bad IDX image magic {magic:#010x}, expected {IDX_IMAGE_MAGIC:#010x}"
        )));
    }
    let m = read_be_u32(&mut r)? as usize;
    let rows = read_be_u32(&mut r)? as usize;
    let cols = read_be_u32(&mut r)? as usize;
    let mut pixels = vec![0u8; m * rows * cols];
    r.read_exact(&mut pixels)?;
    let data: Vec<f64> = pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
    Array2::from_shape_vec((m, rows * cols), data)
        .map_err(|e| Error::Format(format!("IDX shape error: {e}")))
}

/// Read an IDX label file (big-endian, magic 2049).
pub fn read_idx_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let file = std::fs::File::open(path.as_ref())?;
    let mut r = std::io::BufReader::new(file);
    let magic = read_be_u32(&mut r)?;
    if magic != IDX_LABEL_MAGIC {
        return Err(Error::Format(format!(
            "bad IDX label magic {magic:#010x}, expected {IDX_LABEL_MAGIC:#010x}"
        )));
    }
    let m = read_be_u32(&mut r)? as usize;
    let mut labels = vec![0u8; m];
    r.read_exact(&mut labels)?;
    Ok(labels.into_iter().map(usize::from).collect())
}

/// Load a paired IDX image/label file set.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<(Array2<f64>, Vec<usize>)> {
    let images = read_idx_images(images_path)?;
    let labels = read_idx_labels(labels_path)?;
    if images.nrows() != labels.len() {
        return Err(Error::DimensionMismatch(images.nrows(), labels.len()));
    }
    Ok((images, labels))
}

/// Write images and labels as a paired IDX file set (the inverse of
/// [`load_idx`], handy for fixtures and for exporting generated pools).
pub fn write_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    images: &Array2<f64>,
    labels: &[usize],
    rows: usize,
    cols: usize,
) -> Result<()> {
    if images.ncols() != rows * cols {
        return Err(Error::DimensionMismatch(images.ncols(), rows * cols));
    }
    if images.nrows() != labels.len() {
        return Err(Error::DimensionMismatch(images.nrows(), labels.len()));
    }
    let mut w = BufWriter::new(std::fs::File::create(images_path.as_ref())?);
    w.write_all(&IDX_IMAGE_MAGIC.to_be_bytes())?;
    w.write_all(&(images.nrows() as u32).to_be_bytes())?;
    w.write_all(&(rows as u32).to_be_bytes())?;
    w.write_all(&(cols as u32).to_be_bytes())?;
    for v in images.iter() {
        w.write_all(&[(v * 255.0).round().clamp(0.0, 255.0) as u8])?;
    }
    w.flush()?;
    let mut w = BufWriter::new(std::fs::File::create(labels_path.as_ref())?);
    w.write_all(&IDX_LABEL_MAGIC.to_be_bytes())?;
    w.write_all(&(labels.len() as u32).to_be_bytes())?;
    for &l in labels {
        w.write_all(&[l as u8])?;
    }
    w.flush()?;
    Ok(())
}

/// Rotate a square image clockwise by `theta_deg` about its center with
/// bilinear interpolation and zero fill outside the source.
///
/// The center is `(side−1)/2` in pixel coordinates, so a 180° rotation maps
/// pixel `(r, c)` exactly onto `(side−1−r, side−1−c)`.
pub fn rotate_image_bilinear(img: &[f64], side: usize, theta_deg: f64) -> Vec<f64> {
    debug_assert_eq!(img.len(), side * side);
    if theta_deg == 0.0 {
        return img.to_vec();
    }
    let center = (side as f64 - 1.0) / 2.0;
    let theta = theta_deg.to_radians();
    let (s, c) = theta.sin_cos();
    let mut out = vec![0.0f64; side * side];
    for r in 0..side {
        for col in 0..side {
            // sample the source at the output offset rotated by +θ
            let dx = col as f64 - center;
            let dy = r as f64 - center;
            let sx = dx * c - dy * s + center;
            let sy = dx * s + dy * c + center;
            let x0 = sx.floor();
            let y0 = sy.floor();
            let fx = sx - x0;
            let fy = sy - y0;
            let mut acc = 0.0;
            for (oy, wy) in [(0isize, 1.0 - fy), (1, fy)] {
                for (ox, wx) in [(0isize, 1.0 - fx), (1, fx)] {
                    let px = x0 as isize + ox;
                    let py = y0 as isize + oy;
                    if px >= 0 && py >= 0 && (px as usize) < side && (py as usize) < side {
                        acc += wx * wy * img[py as usize * side + px as usize];
                    }
                }
            }
            out[r * side + col] = acc;
        }
    }
    out
}

/// Build a rotated-image task collection from a source image set.
///
/// Draws one fixed pool of `images_per_task` images, then creates
/// `num_tasks` tasks, each rotating every pooled image by its own angle
/// `θ ~ Uniform[0°, 180°]` about the image center. Labels are the pool
/// labels in pool order for every task.
///
/// Streams: the pool is drawn on the reserved stream `u64::MAX`; task `i`
/// uses stream `i`.
pub fn make_mnist_mod(
    images: &Array2<f64>,
    labels: &[usize],
    num_tasks: usize,
    images_per_task: usize,
    seed: u64,
) -> Result<DomainCollection> {
    if images.nrows() == 0 {
        return Err(Error::EmptyInput("image set"));
    }
    if images.nrows() != labels.len() {
        return Err(Error::DimensionMismatch(images.nrows(), labels.len()));
    }
    if num_tasks < 1 || images_per_task < 1 {
        return Err(Error::InvalidParam("num_tasks and images_per_task must be >= 1".into()));
    }
    if images_per_task > images.nrows() {
        return Err(Error::InvalidParam(format!(
            "images_per_task {} exceeds source size {}",
            images_per_task,
            images.nrows()
        )));
    }
    let d = images.ncols();
    let side = (d as f64).sqrt().round() as usize;
    if side * side != d {
        return Err(Error::InvalidParam(format!("images must be square, got {d} pixels")));
    }

    let mut pool_rng = child_rng(seed, u64::MAX);
    let mut indices: Vec<usize> = (0..images.nrows()).collect();
    indices.shuffle(&mut pool_rng);
    indices.truncate(images_per_task);
    let pool: Vec<Vec<f64>> = indices.iter().map(|&i| images.row(i).to_vec()).collect();
    let pool_labels: Vec<usize> = indices.iter().map(|&i| labels[i]).collect();
    let c = labels.iter().copied().max().unwrap_or(0) + 1;

    let tasks: Vec<TaskDataset> = (0..num_tasks)
        .into_par_iter()
        .map(|i| {
            let mut rng = child_rng(seed, i as u64);
            let theta_deg: f64 = rng.random_range(0.0..180.0);
            let mut x = Array2::zeros((images_per_task, d));
            for (j, img) in pool.iter().enumerate() {
                let rotated = rotate_image_bilinear(img, side, theta_deg);
                x.row_mut(j)
                    .iter_mut()
                    .zip(rotated.iter())
                    .for_each(|(dst, &src)| *dst = src);
            }
            TaskDataset { task_id: i, x, y: pool_labels.clone(), angle_deg: Some(theta_deg) }
        })
        .collect();
    DomainCollection::new(tasks, c)
}

/// Split a collection into disjoint train/test parts at the task level.
///
/// Deterministic per seed; task ids are preserved.
pub fn split_tasks(
    collection: &DomainCollection,
    n_train: usize,
    seed: u64,
) -> Result<(DomainCollection, DomainCollection)> {
    let n = collection.len();
    if n_train < 1 {
        return Err(Error::InvalidParam("n_train must be >= 1".into()));
    }
    if n_train >= n {
        return Err(Error::InvalidParam(format!(
            "n_train {n_train} must be < number of tasks {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from(seed));
    let mut train = Vec::with_capacity(n_train);
    let mut test = Vec::with_capacity(n - n_train);
    for (k, &idx) in order.iter().enumerate() {
        let task = collection.tasks[idx].clone();
        if k < n_train {
            train.push(task);
        } else {
            test.push(task);
        }
    }
    Ok((
        DomainCollection::new(train, collection.c)?,
        DomainCollection::new(test, collection.c)?,
    ))
}

/// On-disk manifest of a task-collection directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub c: usize,
    pub d: usize,
    pub tasks: Vec<ManifestTask>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestTask {
    pub id: usize,
    pub n: usize,
    pub file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle_deg: Option<f64>,
}

/// Write a collection as a directory: one headerless CSV per task
/// (d feature columns then the label) plus `manifest.json`.
pub fn save_collection(dir: impl AsRef<Path>, collection: &DomainCollection) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut manifest = Manifest { c: collection.c, d: collection.d, tasks: Vec::new() };
    for task in &collection.tasks {
        let file = format!("task_{:04}.csv", task.task_id);
        let mut w = BufWriter::new(std::fs::File::create(dir.join(&file))?);
        for (row, &label) in task.x.rows().into_iter().zip(&task.y) {
            let mut line = String::new();
            for v in row.iter() {
                line.push_str(&format!("{v}"));
                line.push(',');
            }
            line.push_str(&format!("{label}\n"));
            w.write_all(line.as_bytes())?;
        }
        w.flush()?;
        manifest.tasks.push(ManifestTask {
            id: task.task_id,
            n: task.len(),
            file,
            angle_deg: task.angle_deg,
        });
    }
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}

/// Load a collection from a directory written by [`save_collection`].
pub fn load_collection(dir: impl AsRef<Path>) -> Result<DomainCollection> {
    let dir = dir.as_ref();
    let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?;
    let mut tasks = Vec::with_capacity(manifest.tasks.len());
    for entry in &manifest.tasks {
        let file = std::fs::File::open(dir.join(&entry.file))?;
        let reader = std::io::BufReader::new(file);
        let mut data = Vec::with_capacity(entry.n * manifest.d);
        let mut labels = Vec::with_capacity(entry.n);
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != manifest.d + 1 {
                return Err(Error::Format(format!(
                    "{}:{}: expected {} columns, got {}",
                    entry.file,
                    lineno + 1,
                    manifest.d + 1,
                    fields.len()
                )));
            }
            for f in &fields[..manifest.d] {
                data.push(f.parse::<f64>().map_err(|e| {
                    Error::Format(format!("{}:{}: bad float: {e}", entry.file, lineno + 1))
                })?);
            }
            labels.push(fields[manifest.d].parse::<usize>().map_err(|e| {
                Error::Format(format!("{}:{}: bad label: {e}", entry.file, lineno + 1))
            })?);
        }
        let n = labels.len();
        let x = Array2::from_shape_vec((n, manifest.d), data)
            .map_err(|e| Error::Format(format!("{}: shape error: {e}", entry.file)))?;
        let mut task = TaskDataset::new(entry.id, x, labels)?;
        task.angle_deg = entry.angle_deg;
        tasks.push(task);
    }
    DomainCollection::new(tasks, manifest.c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stripe_labels_bin_first_coordinate() {
        assert_eq!(stripe_label(0.05), 0);
        assert_eq!(stripe_label(0.30), 3);
        assert_eq!(stripe_label(0.999), 9);
        assert_eq!(stripe_label(1.0), 9); // top edge clipped
    }

    #[test]
    fn rotation_by_180_about_origin() {
        // identity rotation leaves coordinates untouched
        let (x, y) = rotate_cw(0.05, 0.30, 0.0);
        assert_eq!((x, y), (0.05, 0.30));
        // (0.05, 0.30) rotated by 180° lands on (−0.05, −0.30)
        let (x, y) = rotate_cw(0.05, 0.30, std::f64::consts::PI);
        assert!((x + 0.05).abs() < 1e-12);
        assert!((y + 0.30).abs() < 1e-12);
    }

    #[test]
    fn rotation_by_90_is_clockwise() {
        let (x, y) = rotate_cw(1.0, 0.0, std::f64::consts::FRAC_PI_2);
        assert!((x - 0.0).abs() < 1e-12);
        assert!((y + 1.0).abs() < 1e-12);
    }

    #[test]
    fn synthetic_is_deterministic() {
        let a = generate_synthetic(5, 17, 99).unwrap();
        let b = generate_synthetic(5, 17, 99).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(5, 17, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn synthetic_labels_recovered_by_derotation() {
        let coll = generate_synthetic(8, 40, 3).unwrap();
        for task in &coll.tasks {
            let theta = task.angle_deg.unwrap().to_radians();
            for (row, &label) in task.x.rows().into_iter().zip(&task.y) {
                // undo the clockwise rotation
                let (px, _py) = rotate_cw(row[0], row[1], -theta);
                assert_eq!(stripe_label(px), label);
            }
        }
    }

    #[test]
    fn synthetic_rotation_preserves_distances() {
        let coll = generate_synthetic(3, 25, 5).unwrap();
        for task in &coll.tasks {
            let theta = task.angle_deg.unwrap().to_radians();
            let back: Vec<(f64, f64)> = task
                .x
                .rows()
                .into_iter()
                .map(|r| rotate_cw(r[0], r[1], -theta))
                .collect();
            for i in 0..task.len() {
                for j in (i + 1)..task.len() {
                    let d_rot = ((task.x[[i, 0]] - task.x[[j, 0]]).powi(2)
                        + (task.x[[i, 1]] - task.x[[j, 1]]).powi(2))
                    .sqrt();
                    let d_orig = ((back[i].0 - back[j].0).powi(2) + (back[i].1 - back[j].1).powi(2)).sqrt();
                    assert!((d_rot - d_orig).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn split_partitions_tasks() {
        let coll = generate_synthetic(10, 5, 1).unwrap();
        let (train, test) = split_tasks(&coll, 8, 2).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(test.len(), 2);
        let mut ids: Vec<usize> = train.tasks.iter().chain(&test.tasks).map(|t| t.task_id).collect();
        ids.sort_unstable();
        assert_eq!(ids, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn split_rejects_bad_sizes() {
        let coll = generate_synthetic(4, 5, 1).unwrap();
        assert!(split_tasks(&coll, 0, 0).is_err());
        assert!(split_tasks(&coll, 4, 0).is_err());
        assert!(split_tasks(&coll, 9, 0).is_err());
    }

    #[test]
    fn idx_roundtrip_and_single_zero_image() {
        let dir = tempfile::tempdir().unwrap();
        let images = Array2::zeros((1, 784));
        let labels = vec![7usize];
        let ip = dir.path().join("im.idx");
        let lp = dir.path().join("lb.idx");
        write_idx(&ip, &lp, &images, &labels, 28, 28).unwrap();
        let (im, lb) = load_idx(&ip, &lp).unwrap();
        assert_eq!(im.shape(), &[1, 784]);
        assert!(im.iter().all(|&v| v == 0.0));
        assert_eq!(lb, vec![7]);
    }

    #[test]
    fn idx_rejects_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.idx");
        std::fs::write(&p, [0u8; 16]).unwrap();
        match read_idx_images(&p) {
            Err(Error::Format(_)) => {}
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn idx_truncated_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("trunc.idx");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&0x0000_0803u32.to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        bytes.extend_from_slice(&28u32.to_be_bytes());
        bytes.extend_from_slice(&28u32.to_be_bytes());
        bytes.extend_from_slice(&[0u8; 100]); // far fewer than 2*784 pixels
        std::fs::write(&p, bytes).unwrap();
        match read_idx_images(&p) {
            Err(Error::Io(_)) => {}
            other => panic!("expected io error, got {other:?}"),
        }
    }

    #[test]
    fn image_rotation_identity_and_double_flip() {
        let mut rng = rng_from(13);
        let img: Vec<f64> = (0..28 * 28).map(|_| rng.random_range(0.0..1.0)).collect();
        assert_eq!(rotate_image_bilinear(&img, 28, 0.0), img);
        let rot = rotate_image_bilinear(&img, 28, 180.0);
        for r in 0..28 {
            for c in 0..28 {
                let flipped = img[(27 - r) * 28 + (27 - c)];
                assert!(
                    (rot[r * 28 + c] - flipped).abs() < 1e-6,
                    "pixel ({r},{c}) differs"
                );
            }
        }
    }

    #[test]
    fn mnist_mod_labels_follow_pool_order() {
        let mut rng = rng_from(21);
        let m = 30;
        let data: Vec<f64> = (0..m * 16).map(|_| rng.random_range(0.0..1.0)).collect();
        let images = Array2::from_shape_vec((m, 16), data).unwrap();
        let labels: Vec<usize> = (0..m).map(|i| i % 3).collect();
        let coll = make_mnist_mod(&images, &labels, 4, 10, 77).unwrap();
        assert_eq!(coll.len(), 4);
        assert_eq!(coll.c, 3);
        for t in &coll.tasks[1..] {
            assert_eq!(t.y, coll.tasks[0].y); // same pool order everywhere
        }
    }

    #[test]
    fn mnist_mod_rejects_oversized_pool() {
        let images = Array2::zeros((5, 16));
        let labels = vec![0usize; 5];
        assert!(make_mnist_mod(&images, &labels, 2, 6, 0).is_err());
    }

    #[test]
    fn collection_roundtrip_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let coll = generate_synthetic(4, 7, 11).unwrap();
        save_collection(dir.path().join("coll"), &coll).unwrap();
        let loaded = load_collection(dir.path().join("coll")).unwrap();
        assert_eq!(coll.c, loaded.c);
        assert_eq!(coll.d, loaded.d);
        for (a, b) in coll.tasks.iter().zip(&loaded.tasks) {
            assert_eq!(a.task_id, b.task_id);
            assert_eq!(a.y, b.y);
            assert_eq!(a.angle_deg, b.angle_deg);
            for (u, v) in a.x.iter().zip(b.x.iter()) {
                assert_eq!(u, v); // shortest round-trip float formatting
            }
        }
    }

    #[test]
    fn collection_rejects_bad_labels_and_duplicate_ids() {
        let x = Array2::zeros((2, 2));
        let t0 = TaskDataset::new(0, x.clone(), vec![0, 3]).unwrap();
        assert!(DomainCollection::new(vec![t0], 3).is_err());
        let a = TaskDataset::new(1, x.clone(), vec![0, 1]).unwrap();
        let b = TaskDataset::new(1, x, vec![1, 0]).unwrap();
        assert!(DomainCollection::new(vec![a, b], 2).is_err());
    }
}
