//! End-to-end domain generalization pipeline.
//!
//! Fitting samples three feature maps (embedding, task-kernel, input-kernel),
//! embeds every training task from its points alone, and trains one linear
//! multiclass model on the Kronecker-factored extended features with the
//! per-task-mean weighting. Prediction on an unseen task first embeds the
//! task from its unlabeled points, then scores each point; labels of a test
//! task are only ever touched by evaluation.
//!
//! The pooling baseline ignores marginals entirely and trains on the input
//! features alone, with the same double-average weighting.
//!
//! Model selection is task-level five-fold cross-validation: folds partition
//! tasks, never points, because the risk being estimated is an expectation
//! over fresh tasks. Bandwidth grids are built from median heuristics times
//! caller-supplied multipliers; λ grids are absolute.

use std::io::{BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{self, DomainCollection, TaskDataset};
use crate::error::{Error, Result};
use crate::kernels::KernelConfig;
use crate::losses::LossKind;
use crate::rff::{self, RffMap};
use crate::rng::{mix_seed, rng_from};
use crate::solver::{self, FeatureSet, LinearModel, SolverOptions};

/// Feature dimensions of the three maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RffDims {
    /// Embedding map dimension (features of `k_x'`).
    pub d1: usize,
    /// Task-kernel map dimension (features of `κ`).
    pub d2: usize,
    /// Input-kernel map dimension (features of `k_x`).
    pub d3: usize,
}

impl Default for RffDims {
    fn default() -> Self {
        Self { d1: 1024, d2: 1024, d3: 1024 }
    }
}

impl RffDims {
    pub fn cubed(d: usize) -> Self {
        Self { d1: d, d2: d, d3: d }
    }
}

/// Fitted domain-generalization model.
#[derive(Debug, Clone)]
pub struct DgModel {
    pub map_xp: RffMap,
    pub map_kappa: RffMap,
    pub map_x: RffMap,
    pub linear: LinearModel,
    pub config: KernelConfig,
}

/// Fitted pooling baseline: input features only.
#[derive(Debug, Clone)]
pub struct PoolingModel {
    pub map_x: RffMap,
    pub linear: LinearModel,
}

/// Anything that labels a whole task from its feature matrix.
pub trait TaskPredictor {
    fn predict_points(&self, x: &Array2<f64>) -> Result<Vec<usize>>;

    /// Predict a task's labels; reads only the feature matrix.
    fn predict_task(&self, task: &TaskDataset) -> Result<Vec<usize>> {
        self.predict_points(&task.x)
    }
}

impl DgModel {
    /// κ-features of a task embedding (the per-task factor of the extended
    /// feature).
    fn task_factor(&self, x: &Array2<f64>) -> Result<Array1<f64>> {
        let mu = rff::embed_points(&self.map_xp, x)?;
        rff::features(&self.map_kappa, mu.view())
    }

    /// Per-point scores (n × c) for a task given by its points.
    pub fn scores(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        let zk = self.task_factor(x)?;
        let zx = rff::features_matrix(&self.map_x, x)?;
        let n = zk.len();
        let task_feats = Array2::from_shape_vec((1, n), zk.to_vec()).expect("shape");
        let fs = FeatureSet::Factored { task_feats, point_feats: vec![zx] };
        Ok(solver::model_scores(&self.linear, &fs).remove(0))
    }
}

impl TaskPredictor for DgModel {
    fn predict_points(&self, x: &Array2<f64>) -> Result<Vec<usize>> {
        if x.nrows() == 0 {
            return Err(Error::EmptyInput("task"));
        }
        let scores = self.scores(x)?;
        Ok(scores
            .rows()
            .into_iter()
            .map(|row| solver::argmax(row.to_slice().expect("contiguous")))
            .collect())
    }
}

impl TaskPredictor for PoolingModel {
    fn predict_points(&self, x: &Array2<f64>) -> Result<Vec<usize>> {
        if x.nrows() == 0 {
            return Err(Error::EmptyInput("task"));
        }
        let zx = rff::features_matrix(&self.map_x, x)?;
        let scores = zx.dot(&self.linear.w.t());
        Ok(scores
            .rows()
            .into_iter()
            .map(|row| solver::argmax(row.to_slice().expect("contiguous")))
            .collect())
    }
}

/// Map-sampling seeds are derived from the fit seed with these tags.
const TAG_MAP_XP: u64 = 1;
const TAG_MAP_KAPPA: u64 = 2;
const TAG_MAP_X: u64 = 3;

/// Fit the domain-generalization model on a training collection.
pub fn fit_dg(
    train: &DomainCollection,
    config: &KernelConfig,
    dims: RffDims,
    loss_kind: LossKind,
    lambda: f64,
    opts: &SolverOptions,
    seed: u64,
) -> Result<DgModel> {
    if train.len() < 2 {
        return Err(Error::InvalidParam("need at least 2 training tasks".into()));
    }
    let map_xp = rff::sample_rff(train.d, dims.d1, config.sigma_xp, mix_seed(seed, TAG_MAP_XP))?;
    let map_kappa = rff::sample_rff(dims.d1, dims.d2, config.sigma_kappa, mix_seed(seed, TAG_MAP_KAPPA))?;
    let map_x = rff::sample_rff(train.d, dims.d3, config.sigma_x, mix_seed(seed, TAG_MAP_X))?;

    let features = build_extended_features(train, &map_xp, &map_kappa, &map_x)?;
    let labels = train.labels_by_task();
    let linear = solver::train_linear(&features, &labels, train.c, loss_kind, lambda, opts)?;
    Ok(DgModel { map_xp, map_kappa, map_x, linear, config: *config })
}

/// Kronecker-factored extended features for a collection under fixed maps.
pub(crate) fn build_extended_features(
    coll: &DomainCollection,
    map_xp: &RffMap,
    map_kappa: &RffMap,
    map_x: &RffMap,
) -> Result<FeatureSet> {
    use rayon::prelude::*;
    let rows: Vec<(Array1<f64>, Array2<f64>)> = coll
        .tasks
        .par_iter()
        .map(|task| {
            let mu = rff::embed_task(map_xp, task)?;
            let zk = rff::features(map_kappa, mu.view())?;
            let zx = rff::features_matrix(map_x, &task.x)?;
            Ok((zk, zx))
        })
        .collect::<Result<_>>()?;
    let d2 = map_kappa.feature_dim();
    let mut task_feats = Array2::zeros((coll.len(), d2));
    let mut point_feats = Vec::with_capacity(coll.len());
    for (i, (zk, zx)) in rows.into_iter().enumerate() {
        task_feats.row_mut(i).assign(&zk);
        point_feats.push(zx);
    }
    Ok(FeatureSet::Factored { task_feats, point_feats })
}

/// Fit the pooling baseline: input features only, same per-task weighting.
pub fn fit_pooling(
    train: &DomainCollection,
    sigma_x: f64,
    d3: usize,
    loss_kind: LossKind,
    lambda: f64,
    opts: &SolverOptions,
    seed: u64,
) -> Result<PoolingModel> {
    let map_x = rff::sample_rff(train.d, d3, sigma_x, mix_seed(seed, TAG_MAP_X))?;
    let groups: Vec<Array2<f64>> = train
        .tasks
        .iter()
        .map(|t| rff::features_matrix(&map_x, &t.x))
        .collect::<Result<_>>()?;
    let features = FeatureSet::Dense(groups);
    let labels = train.labels_by_task();
    let linear = solver::train_linear(&features, &labels, train.c, loss_kind, lambda, opts)?;
    Ok(PoolingModel { map_x, linear })
}

/// Evaluation summary over a test collection.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    /// (task id, 0-1 error fraction) per task.
    pub per_task_error: Vec<(usize, f64)>,
    /// Mean of the per-task errors.
    pub mean_error: f64,
    /// Population standard deviation of the per-task errors.
    pub std_error: f64,
    /// Snapshot of the evaluated model's configuration, when known.
    pub config: Option<serde_json::Value>,
}

impl EvalReport {
    pub fn with_config(mut self, config: serde_json::Value) -> Self {
        self.config = Some(config);
        self
    }
}

/// Per-task 0-1 error of a predictor on held-out tasks.
pub fn evaluate<P: TaskPredictor>(model: &P, test: &DomainCollection) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::EmptyInput("test collection"));
    }
    let mut per_task_error = Vec::with_capacity(test.len());
    for task in &test.tasks {
        let pred = model.predict_task(task)?;
        let wrong = pred.iter().zip(&task.y).filter(|(p, y)| p != y).count();
        per_task_error.push((task.task_id, wrong as f64 / task.len() as f64));
    }
    let mean = per_task_error.iter().map(|(_, e)| e).sum::<f64>() / per_task_error.len() as f64;
    let var = per_task_error.iter().map(|(_, e)| (e - mean).powi(2)).sum::<f64>()
        / per_task_error.len() as f64;
    Ok(EvalReport { per_task_error, mean_error: mean, std_error: var.sqrt(), config: None })
}

/// Median pairwise Euclidean distance over (a subsample of) pooled points.
///
/// Subsamples to at most `cap` points (deterministic per seed) before the
/// O(m²) distance pass.
pub fn median_pairwise_distance(points: &Array2<f64>, cap: usize, seed: u64) -> Result<f64> {
    let m = points.nrows();
    if m < 2 {
        return Err(Error::EmptyInput("need at least 2 points for the median heuristic"));
    }
    let rows: Vec<usize> = if m <= cap {
        (0..m).collect()
    } else {
        let mut idx: Vec<usize> = (0..m).collect();
        idx.shuffle(&mut rng_from(seed));
        idx.truncate(cap);
        idx.sort_unstable();
        idx
    };
    let mut dists = Vec::with_capacity(rows.len() * (rows.len() - 1) / 2);
    for (a, &i) in rows.iter().enumerate() {
        for &j in &rows[a + 1..] {
            let mut sq = 0.0;
            for (u, v) in points.row(i).iter().zip(points.row(j).iter()) {
                let diff = u - v;
                sq += diff * diff;
            }
            dists.push(sq.sqrt());
        }
    }
    dists.sort_by(|a, b| a.total_cmp(b));
    Ok(dists[dists.len() / 2])
}

/// Median heuristic on a collection's pooled points (500-point subsample).
pub fn median_heuristic(coll: &DomainCollection, seed: u64) -> Result<f64> {
    let total = coll.total_points();
    let mut pooled = Array2::zeros((total, coll.d));
    let mut row = 0;
    for task in &coll.tasks {
        for r in task.x.rows() {
            pooled.row_mut(row).assign(&r);
            row += 1;
        }
    }
    median_pairwise_distance(&pooled, 500, seed)
}

/// Median pairwise distance between task embeddings under a throwaway
/// embedding map at bandwidth `sigma_xp` (the σ_κ heuristic).
pub fn median_embedding_distance(
    coll: &DomainCollection,
    sigma_xp: f64,
    d1: usize,
    seed: u64,
) -> Result<f64> {
    if coll.len() < 2 {
        return Err(Error::EmptyInput("need at least 2 tasks"));
    }
    let map = rff::sample_rff(coll.d, d1, sigma_xp, seed)?;
    let mus: Vec<Array1<f64>> = coll
        .tasks
        .iter()
        .map(|t| rff::embed_task(&map, t))
        .collect::<Result<_>>()?;
    let mut dists = Vec::new();
    for i in 0..mus.len() {
        for j in (i + 1)..mus.len() {
            let diff = &mus[i] - &mus[j];
            dists.push(diff.dot(&diff).sqrt());
        }
    }
    dists.sort_by(|a, b| a.total_cmp(b));
    Ok(dists[dists.len() / 2])
}

/// Absolute-value hyperparameter grids for cross-validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Grids {
    pub sigma_x: Vec<f64>,
    pub sigma_xp: Vec<f64>,
    pub sigma_kappa: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl Grids {
    pub fn num_cells(&self) -> usize {
        self.sigma_x.len() * self.sigma_xp.len() * self.sigma_kappa.len() * self.lambda.len()
    }
}

/// One evaluated grid cell.
#[derive(Debug, Clone, Serialize)]
pub struct CvCell {
    pub config: KernelConfig,
    pub lambda: f64,
    /// Mean held-out-task error across folds.
    pub cv_error: f64,
}

/// Task-level k-fold assignment: shuffled tasks dealt round-robin.
fn fold_assignment(n_tasks: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n_tasks).collect();
    order.shuffle(&mut rng_from(seed));
    let mut assignment = vec![0usize; n_tasks];
    for (pos, &task) in order.iter().enumerate() {
        assignment[task] = pos % folds;
    }
    assignment
}

fn subset(coll: &DomainCollection, keep: impl Fn(usize) -> bool) -> Result<DomainCollection> {
    let tasks: Vec<TaskDataset> = coll
        .tasks
        .iter()
        .enumerate()
        .filter(|(i, _)| keep(*i))
        .map(|(_, t)| t.clone())
        .collect();
    DomainCollection::new(tasks, coll.c)
}

/// Grid search by task-level cross-validation.
///
/// Folds partition tasks. Cells are visited σ_x-major (then σ_x', σ_κ, λ);
/// ties keep the earliest cell. Returns the winning cell and the full table.
pub fn cross_validate(
    train: &DomainCollection,
    grids: &Grids,
    folds: usize,
    loss_kind: LossKind,
    dims: RffDims,
    opts: &SolverOptions,
    seed: u64,
) -> Result<(CvCell, Vec<CvCell>)> {
    if grids.num_cells() == 0 {
        return Err(Error::EmptyInput("hyperparameter grid"));
    }
    if folds < 2 || folds > train.len() {
        return Err(Error::InvalidParam(format!(
            "folds {} must be in [2, {}]",
            folds,
            train.len()
        )));
    }
    let assignment = fold_assignment(train.len(), folds, mix_seed(seed, 0xF01D));
    let mut splits = Vec::with_capacity(folds);
    for f in 0..folds {
        let fit = subset(train, |i| assignment[i] != f)?;
        let held = subset(train, |i| assignment[i] == f)?;
        splits.push((fit, held));
    }

    let mut table = Vec::with_capacity(grids.num_cells());
    let mut best: Option<CvCell> = None;
    for &sx in &grids.sigma_x {
        for &sxp in &grids.sigma_xp {
            for &sk in &grids.sigma_kappa {
                for &lambda in &grids.lambda {
                    let config = KernelConfig::new(sx, sxp, sk)?;
                    let mut err_sum = 0.0;
                    for (f, (fit, held)) in splits.iter().enumerate() {
                        let model =
                            fit_dg(fit, &config, dims, loss_kind, lambda, opts, mix_seed(seed, 1000 + f as u64))?;
                        err_sum += evaluate(&model, held)?.mean_error;
                    }
                    let cell = CvCell { config, lambda, cv_error: err_sum / folds as f64 };
                    if best.as_ref().is_none_or(|b| cell.cv_error < b.cv_error) {
                        best = Some(cell.clone());
                    }
                    table.push(cell);
                }
            }
        }
    }
    Ok((best.expect("non-empty grid"), table))
}

/// Pooling-baseline grid cell.
#[derive(Debug, Clone, Serialize)]
pub struct PoolingCvCell {
    pub sigma_x: f64,
    pub lambda: f64,
    pub cv_error: f64,
}

/// Task-level cross-validation for the pooling baseline (σ_x × λ grid).
#[allow(clippy::too_many_arguments)]
pub fn cross_validate_pooling(
    train: &DomainCollection,
    sigma_x_grid: &[f64],
    lambda_grid: &[f64],
    folds: usize,
    loss_kind: LossKind,
    d3: usize,
    opts: &SolverOptions,
    seed: u64,
) -> Result<(PoolingCvCell, Vec<PoolingCvCell>)> {
    if sigma_x_grid.is_empty() || lambda_grid.is_empty() {
        return Err(Error::EmptyInput("hyperparameter grid"));
    }
    if folds < 2 || folds > train.len() {
        return Err(Error::InvalidParam(format!(
            "folds {} must be in [2, {}]",
            folds,
            train.len()
        )));
    }
    let assignment = fold_assignment(train.len(), folds, mix_seed(seed, 0xF01D));
    let mut splits = Vec::with_capacity(folds);
    for f in 0..folds {
        let fit = subset(train, |i| assignment[i] != f)?;
        let held = subset(train, |i| assignment[i] == f)?;
        splits.push((fit, held));
    }
    let mut table = Vec::new();
    let mut best: Option<PoolingCvCell> = None;
    for &sx in sigma_x_grid {
        for &lambda in lambda_grid {
            let mut err_sum = 0.0;
            for (f, (fit, held)) in splits.iter().enumerate() {
                let model =
                    fit_pooling(fit, sx, d3, loss_kind, lambda, opts, mix_seed(seed, 1000 + f as u64))?;
                err_sum += evaluate(&model, held)?.mean_error;
            }
            let cell = PoolingCvCell { sigma_x: sx, lambda, cv_error: err_sum / folds as f64 };
            if best.as_ref().is_none_or(|b| cell.cv_error < b.cv_error) {
                best = Some(cell.clone());
            }
            table.push(cell);
        }
    }
    Ok((best.expect("non-empty grid"), table))
}

/// Where a benchmark's task collections come from.
#[derive(Debug, Clone)]
pub enum TaskSource {
    /// Rotated stripe tasks, regenerated per repetition.
    Synthetic { num_tasks: usize, n_per_task: usize },
    /// Rotated-image tasks from an in-memory pool, regenerated per repetition.
    RotatedPool {
        images: Array2<f64>,
        labels: Vec<usize>,
        num_tasks: usize,
        images_per_task: usize,
    },
    /// A fixed on-disk collection, resplit per repetition.
    Directory(std::path::PathBuf),
}

impl TaskSource {
    pub fn name(&self) -> &'static str {
        match self {
            TaskSource::Synthetic { .. } => "synthetic",
            TaskSource::RotatedPool { .. } => "mnist_mod",
            TaskSource::Directory(_) => "generic",
        }
    }
}

/// Bandwidth-multiplier grids for benchmarks; absolute grids are formed per
/// repetition as multiplier × median heuristic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub sigma_x_mults: Vec<f64>,
    pub sigma_xp_mults: Vec<f64>,
    pub sigma_kappa_mults: Vec<f64>,
    pub lambdas: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        let mults = vec![0.1, 0.3, 1.0, 3.0, 10.0];
        Self {
            sigma_x_mults: mults.clone(),
            sigma_xp_mults: mults.clone(),
            sigma_kappa_mults: mults,
            lambdas: vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2],
        }
    }
}

impl GridSpec {
    /// A single-cell grid: median-heuristic bandwidths scaled by the given
    /// multipliers and one λ (skips fold fitting in benchmarks).
    pub fn single(sx_mult: f64, sxp_mult: f64, skappa_mult: f64, lambda: f64) -> Self {
        Self {
            sigma_x_mults: vec![sx_mult],
            sigma_xp_mults: vec![sxp_mult],
            sigma_kappa_mults: vec![skappa_mult],
            lambdas: vec![lambda],
        }
    }

    fn num_cells(&self) -> usize {
        self.sigma_x_mults.len()
            * self.sigma_xp_mults.len()
            * self.sigma_kappa_mults.len()
            * self.lambdas.len()
    }

    fn num_pooling_cells(&self) -> usize {
        self.sigma_x_mults.len() * self.lambdas.len()
    }
}

/// Full benchmark specification.
#[derive(Debug, Clone)]
pub struct BenchmarkSpec {
    pub source: TaskSource,
    /// Tasks assigned to training in each repetition's split.
    pub n_train: usize,
    pub reps: usize,
    pub dims: RffDims,
    /// Pooling feature dimension (defaults to dims.d3 when zero).
    pub pool_dim: usize,
    pub loss: LossKind,
    pub grids: GridSpec,
    pub folds: usize,
    pub solver: SolverOptions,
    pub seed: u64,
}

/// One output row: a method evaluated in one repetition.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub dataset: String,
    pub method: String,
    pub rep: usize,
    pub mean_error_pct: f64,
    pub std_error_pct: f64,
    pub sigma_x: f64,
    pub sigma_xp: Option<f64>,
    pub sigma_kappa: Option<f64>,
    pub lambda: f64,
    pub d1: usize,
    pub d2: usize,
    pub d3: usize,
    pub loss: LossKind,
}

const TAG_SPLIT: u64 = 21;
const TAG_MEDIAN: u64 = 22;
const TAG_MEDIAN_EMB: u64 = 23;
const TAG_CV_DG: u64 = 24;
const TAG_CV_POOL: u64 = 25;
const TAG_FIT_DG: u64 = 26;
const TAG_FIT_POOL: u64 = 27;

/// Run the proposed method against pooling: per repetition, regenerate or
/// resplit the tasks with a child seed, select hyperparameters (single-cell
/// grids skip fold fitting), fit both methods, and evaluate on the held-out
/// tasks.
pub fn benchmark(spec: &BenchmarkSpec) -> Result<Vec<BenchRow>> {
    if spec.reps < 1 {
        return Err(Error::InvalidParam("reps must be >= 1".into()));
    }
    let fixed = match &spec.source {
        TaskSource::Directory(path) => Some(data::load_collection(path)?),
        _ => None,
    };
    let pool_dim = if spec.pool_dim == 0 { spec.dims.d3 } else { spec.pool_dim };
    let mut rows = Vec::with_capacity(spec.reps * 2);
    for rep in 0..spec.reps {
        let rep_seed = mix_seed(spec.seed, rep as u64);
        let full = match &spec.source {
            TaskSource::Synthetic { num_tasks, n_per_task } => {
                data::generate_synthetic(*num_tasks, *n_per_task, rep_seed)?
            }
            TaskSource::RotatedPool { images, labels, num_tasks, images_per_task } => {
                data::make_mnist_mod(images, labels, *num_tasks, *images_per_task, rep_seed)?
            }
            TaskSource::Directory(_) => fixed.clone().expect("loaded above"),
        };
        let (train, test) = data::split_tasks(&full, spec.n_train, mix_seed(rep_seed, TAG_SPLIT))?;

        let base = median_heuristic(&train, mix_seed(rep_seed, TAG_MEDIAN))?;
        let base_kappa =
            median_embedding_distance(&train, base, spec.dims.d1, mix_seed(rep_seed, TAG_MEDIAN_EMB))?;

        // proposed method
        let (config, lambda) = if spec.grids.num_cells() == 1 {
            (
                KernelConfig::new(
                    spec.grids.sigma_x_mults[0] * base,
                    spec.grids.sigma_xp_mults[0] * base,
                    spec.grids.sigma_kappa_mults[0] * base_kappa,
                )?,
                spec.grids.lambdas[0],
            )
        } else {
            let grids = Grids {
                sigma_x: spec.grids.sigma_x_mults.iter().map(|m| m * base).collect(),
                sigma_xp: spec.grids.sigma_xp_mults.iter().map(|m| m * base).collect(),
                sigma_kappa: spec.grids.sigma_kappa_mults.iter().map(|m| m * base_kappa).collect(),
                lambda: spec.grids.lambdas.clone(),
            };
            let (best, _) = cross_validate(
                &train,
                &grids,
                spec.folds,
                spec.loss,
                spec.dims,
                &spec.solver,
                mix_seed(rep_seed, TAG_CV_DG),
            )?;
            (best.config, best.lambda)
        };
        let model = fit_dg(
            &train,
            &config,
            spec.dims,
            spec.loss,
            lambda,
            &spec.solver,
            mix_seed(rep_seed, TAG_FIT_DG),
        )?;
        let report = evaluate(&model, &test)?;
        rows.push(BenchRow {
            dataset: spec.source.name().to_string(),
            method: "proposed".into(),
            rep,
            mean_error_pct: 100.0 * report.mean_error,
            std_error_pct: 100.0 * report.std_error,
            sigma_x: config.sigma_x,
            sigma_xp: Some(config.sigma_xp),
            sigma_kappa: Some(config.sigma_kappa),
            lambda,
            d1: spec.dims.d1,
            d2: spec.dims.d2,
            d3: spec.dims.d3,
            loss: spec.loss,
        });

        // pooling baseline
        let (pool_sigma, pool_lambda) = if spec.grids.num_pooling_cells() == 1 {
            (spec.grids.sigma_x_mults[0] * base, spec.grids.lambdas[0])
        } else {
            let sigma_grid: Vec<f64> = spec.grids.sigma_x_mults.iter().map(|m| m * base).collect();
            let (best, _) = cross_validate_pooling(
                &train,
                &sigma_grid,
                &spec.grids.lambdas,
                spec.folds,
                spec.loss,
                pool_dim,
                &spec.solver,
                mix_seed(rep_seed, TAG_CV_POOL),
            )?;
            (best.sigma_x, best.lambda)
        };
        let pool = fit_pooling(
            &train,
            pool_sigma,
            pool_dim,
            spec.loss,
            pool_lambda,
            &spec.solver,
            mix_seed(rep_seed, TAG_FIT_POOL),
        )?;
        let report = evaluate(&pool, &test)?;
        rows.push(BenchRow {
            dataset: spec.source.name().to_string(),
            method: "pooling".into(),
            rep,
            mean_error_pct: 100.0 * report.mean_error,
            std_error_pct: 100.0 * report.std_error,
            sigma_x: pool_sigma,
            sigma_xp: None,
            sigma_kappa: None,
            lambda: pool_lambda,
            d1: 0,
            d2: 0,
            d3: pool_dim,
            loss: spec.loss,
        });
    }
    Ok(rows)
}

/// Render benchmark rows as CSV (deterministic shortest-round-trip floats).
pub fn rows_to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(
        "dataset,method,rep,mean_error_pct,std_error_pct,sigma_x,sigma_xp,sigma_kappa,lambda,d1,d2,d3,loss\n",
    );
    for r in rows {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x}"));
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.dataset,
            r.method,
            r.rep,
            r.mean_error_pct,
            r.std_error_pct,
            r.sigma_x,
            opt(r.sigma_xp),
            opt(r.sigma_kappa),
            r.lambda,
            r.d1,
            r.d2,
            r.d3,
            r.loss
        ));
    }
    out
}

/// Mean ± population std of per-rep mean errors, grouped by method in
/// first-seen order.
#[derive(Debug, Clone, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub mean_error_pct: f64,
    pub std_error_pct: f64,
    pub reps: usize,
}

pub fn summarize(rows: &[BenchRow]) -> Vec<MethodSummary> {
    let mut order: Vec<String> = Vec::new();
    for r in rows {
        if !order.iter().any(|m| m == &r.method) {
            order.push(r.method.clone());
        }
    }
    order
        .into_iter()
        .map(|method| {
            let errs: Vec<f64> = rows
                .iter()
                .filter(|r| r.method == method)
                .map(|r| r.mean_error_pct)
                .collect();
            let mean = errs.iter().sum::<f64>() / errs.len() as f64;
            let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / errs.len() as f64;
            MethodSummary { method, mean_error_pct: mean, std_error_pct: var.sqrt(), reps: errs.len() }
        })
        .collect()
}

const MODEL_MAGIC: &[u8; 4] = b"DGMF";
const MODEL_VERSION: u32 = 1;
const KIND_DG: u8 = 1;
const KIND_POOLING: u8 = 2;

/// A persistable fitted model of either method.
#[derive(Debug, Clone)]
pub enum ModelFile {
    Dg(Box<DgModel>),
    Pooling(PoolingModel),
}

impl ModelFile {
    pub fn predict_task(&self, task: &TaskDataset) -> Result<Vec<usize>> {
        match self {
            ModelFile::Dg(m) => m.predict_task(task),
            ModelFile::Pooling(m) => m.predict_task(task),
        }
    }

    pub fn evaluate(&self, test: &DomainCollection) -> Result<EvalReport> {
        match self {
            ModelFile::Dg(m) => Ok(evaluate(m.as_ref(), test)?.with_config(serde_json::json!({
                "method": "dg",
                "sigma_x": m.config.sigma_x,
                "sigma_xp": m.config.sigma_xp,
                "sigma_kappa": m.config.sigma_kappa,
                "lambda": m.linear.lambda,
                "loss": m.linear.loss_kind,
                "dims": [m.map_xp.feature_dim(), m.map_kappa.feature_dim(), m.map_x.feature_dim()],
            }))),
            ModelFile::Pooling(m) => Ok(evaluate(m, test)?.with_config(serde_json::json!({
                "method": "pooling",
                "sigma_x": m.map_x.sigma,
                "lambda": m.linear.lambda,
                "loss": m.linear.loss_kind,
                "dims": [0, 0, m.map_x.feature_dim()],
            }))),
        }
    }
}

fn write_linear(w: &mut impl Write, model: &LinearModel) -> Result<()> {
    let tag: u8 = match model.loss_kind {
        LossKind::CrammerSinger => 0,
        LossKind::MultinomialLogistic => 1,
        LossKind::WestonWatkins => 2,
        LossKind::Lee => 3,
    };
    w.write_all(&[tag])?;
    w.write_all(&model.lambda.to_le_bytes())?;
    w.write_all(&(model.w.nrows() as u64).to_le_bytes())?;
    w.write_all(&(model.w.ncols() as u64).to_le_bytes())?;
    for v in model.w.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_linear(r: &mut impl Read) -> Result<LinearModel> {
    let mut byte = [0u8; 1];
    r.read_exact(&mut byte)?;
    let loss_kind = match byte[0] {
        0 => LossKind::CrammerSinger,
        1 => LossKind::MultinomialLogistic,
        2 => LossKind::WestonWatkins,
        3 => LossKind::Lee,
        other => return Err(Error::Format(format!("unknown loss tag {other}"))),
    };
    let mut f64buf = [0u8; 8];
    r.read_exact(&mut f64buf)?;
    let lambda = f64::from_le_bytes(f64buf);
    r.read_exact(&mut f64buf)?;
    let c = u64::from_le_bytes(f64buf) as usize;
    r.read_exact(&mut f64buf)?;
    let d = u64::from_le_bytes(f64buf) as usize;
    let mut data = Vec::with_capacity(c * d);
    for _ in 0..c * d {
        r.read_exact(&mut f64buf)?;
        data.push(f64::from_le_bytes(f64buf));
    }
    Ok(LinearModel {
        w: Array2::from_shape_vec((c, d), data).map_err(|e| Error::Format(format!("weights: {e}")))?,
        lambda,
        loss_kind,
    })
}

/// Save a fitted model (versioned binary: maps, weights, bandwidths).
pub fn save_model(path: impl AsRef<Path>, model: &ModelFile) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path.as_ref())?);
    w.write_all(MODEL_MAGIC)?;
    w.write_all(&MODEL_VERSION.to_le_bytes())?;
    match model {
        ModelFile::Dg(m) => {
            w.write_all(&[KIND_DG])?;
            w.write_all(&m.config.sigma_x.to_le_bytes())?;
            w.write_all(&m.config.sigma_xp.to_le_bytes())?;
            w.write_all(&m.config.sigma_kappa.to_le_bytes())?;
            rff::write_map(&mut w, &m.map_xp)?;
            rff::write_map(&mut w, &m.map_kappa)?;
            rff::write_map(&mut w, &m.map_x)?;
            write_linear(&mut w, &m.linear)?;
        }
        ModelFile::Pooling(m) => {
            w.write_all(&[KIND_POOLING])?;
            rff::write_map(&mut w, &m.map_x)?;
            write_linear(&mut w, &m.linear)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Load a model written by [`save_model`].
pub fn load_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path.as_ref())?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MODEL_MAGIC {
        return Err(Error::Format("bad model magic".into()));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let version = u32::from_le_bytes(u32buf);
    if version != MODEL_VERSION {
        return Err(Error::Format(format!("unsupported model version {version}")));
    }
    let mut kind = [0u8; 1];
    r.read_exact(&mut kind)?;
    match kind[0] {
        KIND_DG => {
            let mut f64buf = [0u8; 8];
            r.read_exact(&mut f64buf)?;
            let sigma_x = f64::from_le_bytes(f64buf);
            r.read_exact(&mut f64buf)?;
            let sigma_xp = f64::from_le_bytes(f64buf);
            r.read_exact(&mut f64buf)?;
            let sigma_kappa = f64::from_le_bytes(f64buf);
            let map_xp = rff::read_map(&mut r)?;
            let map_kappa = rff::read_map(&mut r)?;
            let map_x = rff::read_map(&mut r)?;
            let linear = read_linear(&mut r)?;
            Ok(ModelFile::Dg(Box::new(DgModel {
                map_xp,
                map_kappa,
                map_x,
                linear,
                config: KernelConfig::new(sigma_x, sigma_xp, sigma_kappa)?,
            })))
        }
        KIND_POOLING => {
            let map_x = rff::read_map(&mut r)?;
            let linear = read_linear(&mut r)?;
            Ok(ModelFile::Pooling(PoolingModel { map_x, linear }))
        }
        other => Err(Error::Format(format!("unknown model kind {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generate_synthetic;
    use crate::rng::child_rng;
    use rand::Rng;

    fn desk_opts() -> SolverOptions {
        SolverOptions { max_iters: 150, tol: 1e-6 }
    }

    fn desk_config(train: &DomainCollection, dims: RffDims) -> KernelConfig {
        let base = median_heuristic(train, 7).unwrap();
        let base_k = median_embedding_distance(train, base, dims.d1, 8).unwrap();
        KernelConfig::new(0.15 * base, base, 0.2 * base_k).unwrap()
    }

    /// Tasks drawn from one shared distribution (no rotation).
    fn iid_tasks(num: usize, n: usize, seed: u64, id_base: usize) -> Vec<TaskDataset> {
        (0..num)
            .map(|i| {
                let mut rng = child_rng(seed, (id_base + i) as u64);
                let mut x = Array2::zeros((n, 2));
                let mut y = Vec::with_capacity(n);
                for j in 0..n {
                    let px: f64 = rng.random_range(0.0..1.0);
                    let py: f64 = rng.random_range(0.0..1.0);
                    x[[j, 0]] = px;
                    x[[j, 1]] = py;
                    y.push(data::stripe_label(px));
                }
                TaskDataset::new(id_base + i, x, y).unwrap()
            })
            .collect()
    }

    #[test]
    fn fit_is_deterministic() {
        let coll = generate_synthetic(6, 15, 40).unwrap();
        let dims = RffDims::cubed(64);
        let cfg = desk_config(&coll, dims);
        let a = fit_dg(&coll, &cfg, dims, LossKind::MultinomialLogistic, 1e-3, &desk_opts(), 5).unwrap();
        let b = fit_dg(&coll, &cfg, dims, LossKind::MultinomialLogistic, 1e-3, &desk_opts(), 5).unwrap();
        assert_eq!(a.linear.w, b.linear.w);
    }

    #[test]
    fn identical_tasks_predict_identically() {
        let base = generate_synthetic(3, 12, 50).unwrap();
        // duplicate task 0's sample under two ids
        let mut t1 = base.tasks[0].clone();
        t1.task_id = 100;
        let mut t2 = base.tasks[0].clone();
        t2.task_id = 101;
        let train = DomainCollection::new(
            vec![base.tasks[1].clone(), base.tasks[2].clone(), t1.clone(), t2.clone()],
            base.c,
        )
        .unwrap();
        let dims = RffDims::cubed(32);
        let cfg = desk_config(&train, dims);
        let model =
            fit_dg(&train, &cfg, dims, LossKind::MultinomialLogistic, 1e-3, &desk_opts(), 6).unwrap();
        assert_eq!(model.predict_task(&t1).unwrap(), model.predict_task(&t2).unwrap());
    }

    #[test]
    fn desk_scale_learning_beats_chance() {
        // 10 training tasks of 20 points; fresh tasks for the error estimate
        let coll = generate_synthetic(20, 20, 60).unwrap();
        let (train, test) = data::split_tasks(&coll, 10, 1).unwrap();
        let dims = RffDims::cubed(256);
        let cfg = desk_config(&train, dims);
        let model =
            fit_dg(&train, &cfg, dims, LossKind::MultinomialLogistic, 1e-4, &desk_opts(), 9).unwrap();
        let report = evaluate(&model, &test).unwrap();
        assert!(report.mean_error < 0.9, "test error {}", report.mean_error);
    }

    #[test]
    fn test_labels_never_influence_predictions() {
        let coll = generate_synthetic(8, 15, 70).unwrap();
        let (train, test) = data::split_tasks(&coll, 6, 2).unwrap();
        let dims = RffDims::cubed(48);
        let cfg = desk_config(&train, dims);
        let model =
            fit_dg(&train, &cfg, dims, LossKind::MultinomialLogistic, 1e-3, &desk_opts(), 3).unwrap();
        let task = &test.tasks[0];
        let mut permuted = task.clone();
        permuted.y.rotate_left(3);
        assert_eq!(model.predict_task(task).unwrap(), model.predict_task(&permuted).unwrap());
    }

    #[test]
    fn single_point_test_task_is_well_defined() {
        let coll = generate_synthetic(5, 10, 80).unwrap();
        let dims = RffDims::cubed(32);
        let cfg = desk_config(&coll, dims);
        let model =
            fit_dg(&coll, &cfg, dims, LossKind::MultinomialLogistic, 1e-3, &desk_opts(), 4).unwrap();
        let single = TaskDataset::new(
            999,
            Array2::from_shape_vec((1, 2), vec![0.4, 0.2]).unwrap(),
            vec![0],
        )
        .unwrap();
        let pred = model.predict_task(&single).unwrap();
        assert_eq!(pred.len(), 1);
        assert!(pred[0] < coll.c);
    }

    #[test]
    fn training_task_predictions_match_fit_time_scores() {
        let coll = generate_synthetic(5, 12, 90).unwrap();
        let dims = RffDims::cubed(40);
        let cfg = desk_config(&coll, dims);
        let model =
            fit_dg(&coll, &cfg, dims, LossKind::MultinomialLogistic, 1e-3, &desk_opts(), 11).unwrap();
        // fit-time scoring path: rebuild the factored features and score
        let features =
            build_extended_features(&coll, &model.map_xp, &model.map_kappa, &model.map_x).unwrap();
        let scores = solver::model_scores(&model.linear, &features);
        for (task, s) in coll.tasks.iter().zip(&scores) {
            let fit_preds: Vec<usize> = s
                .rows()
                .into_iter()
                .map(|r| solver::argmax(r.to_slice().unwrap()))
                .collect();
            assert_eq!(model.predict_task(task).unwrap(), fit_preds);
        }
    }

    #[test]
    fn pooling_matches_dg_on_iid_tasks() {
        let train = DomainCollection::new(iid_tasks(8, 60, 500, 0), 10).unwrap();
        let test = DomainCollection::new(iid_tasks(10, 60, 501, 100), 10).unwrap();
        let dims = RffDims::cubed(128);
        let base = median_heuristic(&train, 7).unwrap();
        // iid tasks: embedding distances are pure sampling noise, so a smooth
        // σ_κ makes κ effectively constant and μ̂ degenerate across tasks
        let base_k = median_embedding_distance(&train, base, dims.d1, 8).unwrap();
        let cfg = KernelConfig::new(0.15 * base, base, 5.0 * base_k).unwrap();
        let opts = SolverOptions { max_iters: 400, tol: 1e-9 };
        let lambda = 1e-3;
        let dg = fit_dg(&train, &cfg, dims, LossKind::MultinomialLogistic, lambda, &opts, 12).unwrap();
        let pool =
            fit_pooling(&train, cfg.sigma_x, dims.d3, LossKind::MultinomialLogistic, lambda, &opts, 12)
                .unwrap();
        let e_dg = evaluate(&dg, &test).unwrap().mean_error;
        let e_pool = evaluate(&pool, &test).unwrap().mean_error;
        assert!(
            (e_dg - e_pool).abs() <= 0.02,
            "iid tasks: dg {e_dg} vs pooling {e_pool}"
        );
    }

    #[test]
    fn huge_task_bandwidth_reduces_dg_to_pooling() {
        let coll = generate_synthetic(10, 40, 110).unwrap();
        let (train, test) = data::split_tasks(&coll, 8, 3).unwrap();
        let dims = RffDims::cubed(128);
        let base = median_heuristic(&train, 7).unwrap();
        let cfg = KernelConfig::new(0.15 * base, base, 1e9).unwrap();
        let opts = SolverOptions { max_iters: 400, tol: 1e-9 };
        let lambda = 1e-3;
        let dg = fit_dg(&train, &cfg, dims, LossKind::MultinomialLogistic, lambda, &opts, 13).unwrap();
        let pool =
            fit_pooling(&train, cfg.sigma_x, dims.d3, LossKind::MultinomialLogistic, lambda, &opts, 13)
                .unwrap();
        let e_dg = evaluate(&dg, &test).unwrap().mean_error;
        let e_pool = evaluate(&pool, &test).unwrap().mean_error;
        assert!(
            (e_dg - e_pool).abs() <= 0.02,
            "σ_κ → ∞: dg {e_dg} vs pooling {e_pool}"
        );
    }

    #[test]
    fn pooling_near_chance_on_rotated_tasks() {
        let coll = generate_synthetic(15, 40, 120).unwrap();
        let (train, test) = data::split_tasks(&coll, 12, 4).unwrap();
        let base = median_heuristic(&train, 7).unwrap();
        let opts = SolverOptions { max_iters: 300, tol: 1e-8 };
        let pool =
            fit_pooling(&train, 0.15 * base, 256, LossKind::MultinomialLogistic, 1e-4, &opts, 14).unwrap();
        let err = evaluate(&pool, &test).unwrap().mean_error;
        assert!(err >= 0.5, "pooling error {err} suspiciously low on rotated tasks");
    }

    #[test]
    fn evaluate_report_consistency() {
        struct Perfect;
        impl TaskPredictor for Perfect {
            fn predict_points(&self, x: &Array2<f64>) -> Result<Vec<usize>> {
                Ok(x.rows().into_iter().map(|r| data::stripe_label(r[0])).collect())
            }
        }
        struct Constant;
        impl TaskPredictor for Constant {
            fn predict_points(&self, x: &Array2<f64>) -> Result<Vec<usize>> {
                Ok(vec![0; x.nrows()])
            }
        }
        // unrotated tasks so the stripe rule is the truth
        let coll = DomainCollection::new(iid_tasks(4, 30, 900, 0), 10).unwrap();
        let perfect = evaluate(&Perfect, &coll).unwrap();
        assert_eq!(perfect.mean_error, 0.0);
        assert_eq!(perfect.std_error, 0.0);

        // balanced tasks: one point per class
        let balanced = DomainCollection::new(
            (0..3)
                .map(|i| {
                    let x = Array2::from_shape_fn((10, 2), |(r, c)| {
                        if c == 0 {
                            r as f64 / 10.0 + 0.05
                        } else {
                            0.5
                        }
                    });
                    TaskDataset::new(i, x, (0..10).collect()).unwrap()
                })
                .collect(),
            10,
        )
        .unwrap();
        let constant = evaluate(&Constant, &balanced).unwrap();
        assert!((constant.mean_error - 0.9).abs() < 1e-12);

        let report = evaluate(&Constant, &coll).unwrap();
        let mean = report.per_task_error.iter().map(|(_, e)| e).sum::<f64>()
            / report.per_task_error.len() as f64;
        assert!((report.mean_error - mean).abs() < 1e-12);
    }

    #[test]
    fn cv_single_cell_and_argmin_contract() {
        let coll = generate_synthetic(8, 12, 130).unwrap();
        let dims = RffDims::cubed(24);
        let base = median_heuristic(&coll, 7).unwrap();
        let base_k = median_embedding_distance(&coll, base, dims.d1, 8).unwrap();
        let opts = SolverOptions { max_iters: 60, tol: 1e-5 };

        let single = Grids {
            sigma_x: vec![0.2 * base],
            sigma_xp: vec![base],
            sigma_kappa: vec![base_k],
            lambda: vec![1e-3],
        };
        let (best, table) =
            cross_validate(&coll, &single, 4, LossKind::MultinomialLogistic, dims, &opts, 70).unwrap();
        assert_eq!(table.len(), 1);
        assert_eq!(best.lambda, 1e-3);

        let grid = Grids {
            sigma_x: vec![0.2 * base, base],
            sigma_xp: vec![base],
            sigma_kappa: vec![base_k],
            lambda: vec![1e-3, 1.0],
        };
        let (best, table) =
            cross_validate(&coll, &grid, 4, LossKind::MultinomialLogistic, dims, &opts, 71).unwrap();
        assert_eq!(table.len(), 4);
        for cell in &table {
            assert!(best.cv_error <= cell.cv_error);
        }
    }

    #[test]
    fn cv_folds_partition_tasks() {
        let assignment = fold_assignment(11, 4, 9);
        assert_eq!(assignment.len(), 11);
        let mut counts = [0usize; 4];
        for &f in &assignment {
            assert!(f < 4);
            counts[f] += 1;
        }
        // balanced to within one
        assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
    }

    #[test]
    fn cv_rejects_bad_folds_and_empty_grid() {
        let coll = generate_synthetic(5, 8, 140).unwrap();
        let dims = RffDims::cubed(16);
        let grids = Grids {
            sigma_x: vec![],
            sigma_xp: vec![1.0],
            sigma_kappa: vec![1.0],
            lambda: vec![1e-3],
        };
        assert!(cross_validate(&coll, &grids, 3, LossKind::Lee, dims, &desk_opts(), 0).is_err());
        let grids = Grids {
            sigma_x: vec![1.0],
            sigma_xp: vec![1.0],
            sigma_kappa: vec![1.0],
            lambda: vec![1e-3],
        };
        assert!(cross_validate(&coll, &grids, 6, LossKind::Lee, dims, &desk_opts(), 0).is_err());
        assert!(cross_validate(&coll, &grids, 1, LossKind::Lee, dims, &desk_opts(), 0).is_err());
    }

    #[test]
    fn benchmark_is_reproducible() {
        let spec = BenchmarkSpec {
            source: TaskSource::Synthetic { num_tasks: 8, n_per_task: 12 },
            n_train: 6,
            reps: 1,
            dims: RffDims::cubed(32),
            pool_dim: 0,
            loss: LossKind::MultinomialLogistic,
            grids: GridSpec::single(0.2, 1.0, 1.0, 1e-3),
            folds: 3,
            solver: SolverOptions { max_iters: 40, tol: 1e-5 },
            seed: 123,
        };
        let a = rows_to_csv(&benchmark(&spec).unwrap());
        let b = rows_to_csv(&benchmark(&spec).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 3); // header + 2 method rows
    }

    #[test]
    fn summary_groups_by_method() {
        let spec = BenchmarkSpec {
            source: TaskSource::Synthetic { num_tasks: 8, n_per_task: 10 },
            n_train: 6,
            reps: 2,
            dims: RffDims::cubed(24),
            pool_dim: 0,
            loss: LossKind::MultinomialLogistic,
            grids: GridSpec::single(0.2, 1.0, 1.0, 1e-3),
            folds: 3,
            solver: SolverOptions { max_iters: 30, tol: 1e-5 },
            seed: 5,
        };
        let rows = benchmark(&spec).unwrap();
        let summary = summarize(&rows);
        assert_eq!(summary.len(), 2);
        assert_eq!(summary[0].method, "proposed");
        assert_eq!(summary[1].method, "pooling");
        assert_eq!(summary[0].reps, 2);
    }

    #[test]
    fn model_roundtrip_preserves_predictions() {
        let dir = tempfile::tempdir().unwrap();
        let coll = generate_synthetic(5, 10, 160).unwrap();
        let dims = RffDims::cubed(24);
        let cfg = desk_config(&coll, dims);
        let model =
            fit_dg(&coll, &cfg, dims, LossKind::CrammerSinger, 1e-3, &desk_opts(), 19).unwrap();
        let probe = generate_synthetic(2, 9, 161).unwrap();
        let before: Vec<Vec<usize>> =
            probe.tasks.iter().map(|t| model.predict_task(t).unwrap()).collect();
        let path = dir.path().join("model.dgm");
        save_model(&path, &ModelFile::Dg(Box::new(model))).unwrap();
        let loaded = load_model(&path).unwrap();
        let after: Vec<Vec<usize>> =
            probe.tasks.iter().map(|t| loaded.predict_task(t).unwrap()).collect();
        assert_eq!(before, after);

        let pool = fit_pooling(&coll, 0.3, 24, LossKind::Lee, 1e-2, &desk_opts(), 20).unwrap();
        let before: Vec<usize> = pool.predict_task(&probe.tasks[0]).unwrap();
        let ppath = dir.path().join("pool.dgm");
        save_model(&ppath, &ModelFile::Pooling(pool)).unwrap();
        let loaded = load_model(&ppath).unwrap();
        assert_eq!(loaded.predict_task(&probe.tasks[0]).unwrap(), before);
    }

    #[test]
    fn median_heuristics_are_positive_and_deterministic() {
        let coll = generate_synthetic(6, 30, 170).unwrap();
        let a = median_heuristic(&coll, 7).unwrap();
        let b = median_heuristic(&coll, 7).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0);
        let e = median_embedding_distance(&coll, a, 64, 8).unwrap();
        assert!(e > 0.0);
    }
}
