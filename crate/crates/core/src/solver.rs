//! Regularized empirical risk minimization over task-grouped features.
//!
//! The training objective is the double average
//!
//! ```text
//! F(W) = (1/N) Σ_i (1/n_i) Σ_j ℓ(W z_ij, y_ij) + λ ‖W‖²
//! ```
//!
//! (per-task mean, then mean over tasks), minimized by deterministic
//! full-batch (sub)gradient descent with backtracking line search. Scores
//! are affine in the weights, so the line search reuses one directional
//! score evaluation per iteration instead of re-featurizing per trial step.
//! Hinge-type losses fall back to an unconditional `1/√t` step with iterate
//! averaging when backtracking stalls on a flat region; the best iterate
//! seen is returned either way.
//!
//! Two designs share the optimizer:
//! - explicit features, either dense per task or Kronecker-factored into a
//!   per-task block and a per-point block (the two-level RFF layout), and
//! - the exact extended Gram, training representer weights α with
//!   regularizer `Σ_m α_m K α_mᵀ`.
//!
//! Gradient accumulation is parallel over tasks and classes with a fixed
//! reduction order, so results are bitwise reproducible across thread
//! counts.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::losses::{self, LossKind};

/// Options for the full-batch trainer.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Hard iteration cap.
    pub max_iters: usize,
    /// Relative objective-decrease threshold; for smooth losses convergence
    /// additionally requires `‖∇F‖_∞ ≤ 10·tol`.
    pub tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_iters: 2000, tol: 1e-7 }
    }
}

/// Linear multiclass model on explicit features.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// c × D weight matrix; row m holds the coefficients of f_m.
    pub w: Array2<f64>,
    pub lambda: f64,
    pub loss_kind: LossKind,
}

/// Kernelized model: representer coefficients over the training points.
#[derive(Debug, Clone)]
pub struct KernelModel {
    /// c × M coefficient matrix in training-point order.
    pub alpha: Array2<f64>,
    pub lambda: f64,
    pub loss_kind: LossKind,
}

/// Convergence diagnostics for a fit.
#[derive(Debug, Clone)]
pub struct FitInfo {
    /// Final (best) objective value.
    pub objective: f64,
    /// Iterations performed.
    pub iterations: usize,
    /// Stopped by tolerance rather than the iteration cap.
    pub converged: bool,
    /// Objective after the initial point and each accepted line-search step.
    pub trace: Vec<f64>,
}

/// Training features grouped by task.
#[derive(Debug, Clone)]
pub enum FeatureSet {
    /// Explicit per-point features, one n_i × D block per task.
    Dense(Vec<Array2<f64>>),
    /// Kronecker-factored extended features: point j of task i is
    /// `task_feats[i] ⊗ point_feats[i][j]` (task block outer, point block
    /// inner), matching a row-major c × (D₂·D₃) weight layout.
    Factored {
        /// N × D₂ per-task block (κ-features of the task embeddings).
        task_feats: Array2<f64>,
        /// Per-task n_i × D₃ point blocks.
        point_feats: Vec<Array2<f64>>,
    },
}

impl FeatureSet {
    /// Width of the weight matrix this feature set trains.
    pub fn dim(&self) -> usize {
        match self {
            FeatureSet::Dense(groups) => groups.first().map_or(0, |g| g.ncols()),
            FeatureSet::Factored { task_feats, point_feats } => {
                task_feats.ncols() * point_feats.first().map_or(0, |g| g.ncols())
            }
        }
    }

    /// Number of task groups.
    pub fn num_groups(&self) -> usize {
        match self {
            FeatureSet::Dense(groups) => groups.len(),
            FeatureSet::Factored { point_feats, .. } => point_feats.len(),
        }
    }

    /// Points per group.
    pub fn group_sizes(&self) -> Vec<usize> {
        match self {
            FeatureSet::Dense(groups) => groups.iter().map(|g| g.nrows()).collect(),
            FeatureSet::Factored { point_feats, .. } => point_feats.iter().map(|g| g.nrows()).collect(),
        }
    }
}

/// A problem layout the optimizer can score and differentiate through.
pub(crate) trait Design: Sync {
    fn dim(&self) -> usize;
    fn group_sizes(&self) -> Vec<usize>;
    /// Per-group score matrices (n_i × c) for weights `w` (c × dim).
    fn scores(&self, w: &Array2<f64>) -> Vec<Array2<f64>>;
    /// Data-term gradient from per-group weighted loss gradients (n_i × c).
    fn data_grad(&self, coefs: &[Array2<f64>], c: usize) -> Array2<f64>;
    fn reg_value(&self, w: &Array2<f64>) -> f64;
    fn reg_grad(&self, w: &Array2<f64>) -> Array2<f64>;
    /// Coefficients `(r0, r1, r2)` with `reg(w − s·g) = r0 − r1·s + r2·s²`.
    fn reg_line(&self, w: &Array2<f64>, g: &Array2<f64>) -> (f64, f64, f64);
}

pub(crate) struct LinearDesign<'a> {
    pub features: &'a FeatureSet,
}

impl Design for LinearDesign<'_> {
    fn dim(&self) -> usize {
        self.features.dim()
    }

    fn group_sizes(&self) -> Vec<usize> {
        self.features.group_sizes()
    }

    fn scores(&self, w: &Array2<f64>) -> Vec<Array2<f64>> {
        match self.features {
            FeatureSet::Dense(groups) => groups.par_iter().map(|z| z.dot(&w.t())).collect(),
            FeatureSet::Factored { task_feats, point_feats } => {
                let c = w.nrows();
                let d2 = task_feats.ncols();
                let d3 = point_feats.first().map_or(0, |g| g.ncols());
                // per class: U_m = A · mat(w_m), an N × D₃ matrix
                let per_class: Vec<Array2<f64>> = (0..c)
                    .into_par_iter()
                    .map(|m| {
                        let wm = mat_view(w, m, d2, d3);
                        task_feats.dot(&wm)
                    })
                    .collect();
                point_feats
                    .par_iter()
                    .enumerate()
                    .map(|(i, b)| {
                        let mut v = Array2::zeros((c, d3));
                        for (m, u) in per_class.iter().enumerate() {
                            v.row_mut(m).assign(&u.row(i));
                        }
                        b.dot(&v.t())
                    })
                    .collect()
            }
        }
    }

    fn data_grad(&self, coefs: &[Array2<f64>], c: usize) -> Array2<f64> {
        match self.features {
            FeatureSet::Dense(groups) => {
                let d = self.dim();
                let partials: Vec<Array2<f64>> = groups
                    .par_iter()
                    .zip(coefs.par_iter())
                    .map(|(z, gamma)| gamma.t().dot(z))
                    .collect();
                let mut grad = Array2::zeros((c, d));
                for p in partials {
                    grad += &p;
                }
                grad
            }
            FeatureSet::Factored { task_feats, point_feats } => {
                let d2 = task_feats.ncols();
                let d3 = point_feats.first().map_or(0, |g| g.ncols());
                let n_tasks = point_feats.len();
                // per task: P_i = Γ_iᵀ B_i, a c × D₃ matrix
                let per_task: Vec<Array2<f64>> = point_feats
                    .par_iter()
                    .zip(coefs.par_iter())
                    .map(|(b, gamma)| gamma.t().dot(b))
                    .collect();
                let rows: Vec<Vec<f64>> = (0..c)
                    .into_par_iter()
                    .map(|m| {
                        let mut g_m = Array2::zeros((n_tasks, d3));
                        for (i, p) in per_task.iter().enumerate() {
                            g_m.row_mut(i).assign(&p.row(m));
                        }
                        let gm = task_feats.t().dot(&g_m); // D₂ × D₃
                        let (vec, _) = gm.into_raw_vec_and_offset();
                        vec
                    })
                    .collect();
                let mut grad = Array2::zeros((c, d2 * d3));
                for (m, row) in rows.into_iter().enumerate() {
                    grad.row_mut(m).assign(&ndarray::ArrayView1::from(&row[..]));
                }
                grad
            }
        }
    }

    fn reg_value(&self, w: &Array2<f64>) -> f64 {
        w.iter().map(|v| v * v).sum()
    }

    fn reg_grad(&self, w: &Array2<f64>) -> Array2<f64> {
        w * 2.0
    }

    fn reg_line(&self, w: &Array2<f64>, g: &Array2<f64>) -> (f64, f64, f64) {
        let r0 = self.reg_value(w);
        let r1 = 2.0 * w.iter().zip(g.iter()).map(|(a, b)| a * b).sum::<f64>();
        let r2 = g.iter().map(|v| v * v).sum();
        (r0, r1, r2)
    }
}

/// Row `m` of a c × (D₂·D₃) matrix viewed as D₂ × D₃.
fn mat_view(w: &Array2<f64>, m: usize, d2: usize, d3: usize) -> ArrayView2<'_, f64> {
    let row = w.row(m);
    let slice = row.to_slice().expect("weight rows are contiguous");
    ArrayView2::from_shape((d2, d3), slice).expect("row length is D₂·D₃")
}

pub(crate) struct KernelDesign<'a> {
    pub gram: &'a Array2<f64>,
    pub sizes: Vec<usize>,
}

impl Design for KernelDesign<'_> {
    fn dim(&self) -> usize {
        self.gram.nrows()
    }

    fn group_sizes(&self) -> Vec<usize> {
        self.sizes.clone()
    }

    fn scores(&self, w: &Array2<f64>) -> Vec<Array2<f64>> {
        let full = w.dot(self.gram); // c × M
        let mut out = Vec::with_capacity(self.sizes.len());
        let mut start = 0;
        for &n in &self.sizes {
            let block = full.slice(ndarray::s![.., start..start + n]);
            out.push(block.t().to_owned());
            start += n;
        }
        out
    }

    fn data_grad(&self, coefs: &[Array2<f64>], c: usize) -> Array2<f64> {
        let m_total = self.gram.nrows();
        let mut gamma = Array2::zeros((m_total, c));
        let mut start = 0;
        for block in coefs {
            gamma.slice_mut(ndarray::s![start..start + block.nrows(), ..]).assign(block);
            start += block.nrows();
        }
        gamma.t().dot(self.gram) // K symmetric
    }

    fn reg_value(&self, w: &Array2<f64>) -> f64 {
        let kw = w.dot(self.gram);
        w.iter().zip(kw.iter()).map(|(a, b)| a * b).sum()
    }

    fn reg_grad(&self, w: &Array2<f64>) -> Array2<f64> {
        w.dot(self.gram) * 2.0
    }

    fn reg_line(&self, w: &Array2<f64>, g: &Array2<f64>) -> (f64, f64, f64) {
        let kw = w.dot(self.gram);
        let kg = g.dot(self.gram);
        let r0 = w.iter().zip(kw.iter()).map(|(a, b)| a * b).sum();
        let r1 = 2.0 * g.iter().zip(kw.iter()).map(|(a, b)| a * b).sum::<f64>();
        let r2 = g.iter().zip(kg.iter()).map(|(a, b)| a * b).sum();
        (r0, r1, r2)
    }
}

/// Per-point weights 1/(N·n_i) implementing the per-task-mean average.
fn sample_weights(sizes: &[usize]) -> Vec<f64> {
    let n_tasks = sizes.len() as f64;
    sizes.iter().map(|&n| 1.0 / (n_tasks * n as f64)).collect()
}

/// Weighted average loss over fused scores `S − s·S_dir`.
fn loss_at(
    s_cur: &[Array2<f64>],
    s_dir: Option<(&[Array2<f64>], f64)>,
    labels: &[Vec<usize>],
    kind: LossKind,
    weights: &[f64],
) -> f64 {
    s_cur
        .par_iter()
        .enumerate()
        .map(|(i, block)| {
            let mut scratch = vec![0.0f64; block.ncols()];
            let mut acc = 0.0;
            for (j, row) in block.rows().into_iter().enumerate() {
                let scores: &[f64] = match s_dir {
                    Some((dir, step)) => {
                        let drow = dir[i].row(j);
                        for ((dst, &a), &b) in scratch.iter_mut().zip(row.iter()).zip(drow.iter()) {
                            *dst = a - step * b;
                        }
                        &scratch
                    }
                    None => row.to_slice().expect("contiguous score rows"),
                };
                acc += losses::value_unchecked(kind, scores, labels[i][j]);
            }
            acc * weights[i]
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

/// Weighted loss and per-group weighted loss gradients at the current scores.
fn loss_and_coefs(
    s_cur: &[Array2<f64>],
    labels: &[Vec<usize>],
    kind: LossKind,
    weights: &[f64],
) -> (f64, Vec<Array2<f64>>) {
    let per_group: Vec<(f64, Array2<f64>)> = s_cur
        .par_iter()
        .enumerate()
        .map(|(i, block)| {
            let c = block.ncols();
            let mut gamma = Array2::zeros((block.nrows(), c));
            let mut scratch = vec![0.0f64; c];
            let mut acc = 0.0;
            for (j, row) in block.rows().into_iter().enumerate() {
                let scores = row.to_slice().expect("contiguous score rows");
                acc += losses::value_unchecked(kind, scores, labels[i][j]);
                losses::grad_unchecked(kind, scores, labels[i][j], &mut scratch);
                gamma
                    .row_mut(j)
                    .iter_mut()
                    .zip(&scratch)
                    .for_each(|(dst, &g)| *dst = g * weights[i]);
            }
            (acc * weights[i], gamma)
        })
        .collect();
    let mut total = 0.0;
    let mut coefs = Vec::with_capacity(per_group.len());
    for (l, gamma) in per_group {
        total += l;
        coefs.push(gamma);
    }
    (total, coefs)
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;
const SCORE_REFRESH_EVERY: usize = 64;

fn validate_labels(labels: &[Vec<usize>], sizes: &[usize], c: usize) -> Result<()> {
    if labels.len() != sizes.len() {
        return Err(Error::DimensionMismatch(labels.len(), sizes.len()));
    }
    for (group, &n) in labels.iter().zip(sizes) {
        if group.len() != n {
            return Err(Error::DimensionMismatch(group.len(), n));
        }
        for &y in group {
            if y >= c {
                return Err(Error::LabelOutOfRange { label: y, classes: c });
            }
        }
    }
    Ok(())
}

fn minimize(
    design: &impl Design,
    labels: &[Vec<usize>],
    c: usize,
    kind: LossKind,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<(Array2<f64>, FitInfo)> {
    if lambda <= 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidParam(format!("lambda must be positive, got {lambda}")));
    }
    if c < 2 {
        return Err(Error::InvalidParam("need at least 2 classes".into()));
    }
    let sizes = design.group_sizes();
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::EmptyInput("training features"));
    }
    validate_labels(labels, &sizes, c)?;
    let weights = sample_weights(&sizes);
    let dim = design.dim();

    let mut w = Array2::zeros((c, dim));
    let mut scores = design.scores(&w);
    let mut obj = loss_at(&scores, None, labels, kind, &weights) + lambda * design.reg_value(&w);
    if !obj.is_finite() {
        return Err(Error::Diverged);
    }
    let mut best_w = w.clone();
    let mut best_obj = obj;
    let mut trace = vec![obj];
    let mut step_init = 1.0f64;
    let mut converged = false;
    let mut iterations = 0;

    // iterate averaging for the nonsmooth kinds
    let averaging = !kind.is_smooth();
    let mut w_sum: Option<Array2<f64>> = averaging.then(|| Array2::zeros((c, dim)));
    let mut avg_count = 0usize;

    for t in 1..=opts.max_iters {
        iterations = t;
        let (_, coefs) = loss_and_coefs(&scores, labels, kind, &weights);
        let mut grad = design.data_grad(&coefs, c);
        grad += &(design.reg_grad(&w) * lambda);
        let grad_norm_sq: f64 = grad.iter().map(|v| v * v).sum();
        if !grad_norm_sq.is_finite() {
            return Err(Error::Diverged);
        }
        if grad_norm_sq == 0.0 {
            converged = true;
            break;
        }
        let grad_inf = grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));

        let s_dir = design.scores(&grad);
        let (r0, r1, r2) = design.reg_line(&w, &grad);

        let mut step = step_init;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial = loss_at(&scores, Some((&s_dir, step)), labels, kind, &weights)
                + lambda * (r0 - r1 * step + r2 * step * step);
            if trial.is_finite() && trial <= obj - ARMIJO_C1 * step * grad_norm_sq {
                accepted = Some((step, trial));
                break;
            }
            step *= 0.5;
        }

        match accepted {
            Some((s, new_obj)) => {
                w.scaled_add(-s, &grad);
                for (cur, dir) in scores.iter_mut().zip(&s_dir) {
                    cur.scaled_add(-s, dir);
                }
                let prev = obj;
                obj = new_obj;
                trace.push(obj);
                step_init = (s * 2.0).min(1e8);
                if obj < best_obj {
                    best_obj = obj;
                    best_w.assign(&w);
                }
                if let Some(sum) = w_sum.as_mut() {
                    sum.scaled_add(1.0, &w);
                    avg_count += 1;
                }
                let rel = (prev - obj) / prev.abs().max(f64::MIN_POSITIVE);
                if rel < opts.tol && (!kind.is_smooth() || grad_inf <= 10.0 * opts.tol) {
                    converged = true;
                    break;
                }
            }
            None => {
                if kind.is_smooth() {
                    // smooth convex objective: failed backtracking means the
                    // decrease is below floating-point resolution
                    converged = true;
                    break;
                }
                let s_fb = 1.0 / ((1.0 + grad_norm_sq.sqrt()) * (t as f64).sqrt());
                w.scaled_add(-s_fb, &grad);
                for (cur, dir) in scores.iter_mut().zip(&s_dir) {
                    cur.scaled_add(-s_fb, dir);
                }
                obj = loss_at(&scores, None, labels, kind, &weights) + lambda * design.reg_value(&w);
                if !obj.is_finite() {
                    return Err(Error::Diverged);
                }
                if obj < best_obj {
                    best_obj = obj;
                    best_w.assign(&w);
                }
                if let Some(sum) = w_sum.as_mut() {
                    sum.scaled_add(1.0, &w);
                    avg_count += 1;
                }
            }
        }

        if t % SCORE_REFRESH_EVERY == 0 {
            scores = design.scores(&w);
            obj = loss_at(&scores, None, labels, kind, &weights) + lambda * design.reg_value(&w);
        }
    }

    if let Some(sum) = w_sum {
        if avg_count > 0 {
            let avg = sum / avg_count as f64;
            let s_avg = design.scores(&avg);
            let avg_obj =
                loss_at(&s_avg, None, labels, kind, &weights) + lambda * design.reg_value(&avg);
            if avg_obj < best_obj {
                best_obj = avg_obj;
                best_w = avg;
            }
        }
    }

    Ok((
        best_w,
        FitInfo { objective: best_obj, iterations, converged, trace },
    ))
}

/// Eq.-style objective of a linear model on grouped features.
pub fn objective(model: &LinearModel, features: &FeatureSet, labels: &[Vec<usize>]) -> Result<f64> {
    let design = LinearDesign { features };
    let sizes = design.group_sizes();
    validate_labels(labels, &sizes, model.w.nrows())?;
    if model.w.ncols() != design.dim() {
        return Err(Error::DimensionMismatch(model.w.ncols(), design.dim()));
    }
    let weights = sample_weights(&sizes);
    let scores = design.scores(&model.w);
    Ok(loss_at(&scores, None, labels, model.loss_kind, &weights)
        + model.lambda * design.reg_value(&model.w))
}

/// Full objective gradient at the model's weights (analytic; the finite
/// difference check in the test suite runs against this).
pub fn objective_grad(model: &LinearModel, features: &FeatureSet, labels: &[Vec<usize>]) -> Result<Array2<f64>> {
    let design = LinearDesign { features };
    let sizes = design.group_sizes();
    validate_labels(labels, &sizes, model.w.nrows())?;
    let weights = sample_weights(&sizes);
    let scores = design.scores(&model.w);
    let (_, coefs) = loss_and_coefs(&scores, labels, model.loss_kind, &weights);
    let mut grad = design.data_grad(&coefs, model.w.nrows());
    grad += &(design.reg_grad(&model.w) * model.lambda);
    Ok(grad)
}

/// Train a linear multiclass model.
pub fn train_linear(
    features: &FeatureSet,
    labels: &[Vec<usize>],
    c: usize,
    kind: LossKind,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<LinearModel> {
    train_linear_with_info(features, labels, c, kind, lambda, opts).map(|(m, _)| m)
}

/// Train a linear multiclass model, returning convergence diagnostics.
pub fn train_linear_with_info(
    features: &FeatureSet,
    labels: &[Vec<usize>],
    c: usize,
    kind: LossKind,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<(LinearModel, FitInfo)> {
    let design = LinearDesign { features };
    let (w, info) = minimize(&design, labels, c, kind, lambda, opts)?;
    Ok((LinearModel { w, lambda, loss_kind: kind }, info))
}

/// Per-group score matrices (n_i × c) of a linear model.
pub fn model_scores(model: &LinearModel, features: &FeatureSet) -> Vec<Array2<f64>> {
    LinearDesign { features }.scores(&model.w)
}

/// Predicted class of one explicit feature vector: argmax of the scores,
/// ties toward the lowest class index.
pub fn predict(model: &LinearModel, feature: &[f64]) -> Result<usize> {
    if feature.len() != model.w.ncols() {
        return Err(Error::DimensionMismatch(feature.len(), model.w.ncols()));
    }
    let scores = model.w.dot(&ndarray::ArrayView1::from(feature));
    Ok(argmax(scores.as_slice().expect("contiguous")))
}

/// Lowest-index argmax.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in scores.iter().enumerate().skip(1) {
        if v > scores[best] {
            best = j;
        }
    }
    best
}

/// Cap on training points for the exact-Gram trainer.
pub const KERNEL_TRAIN_CAP: usize = 4096;

/// Train representer coefficients on an exact extended Gram matrix.
///
/// `task_index` maps each Gram row to its task and must be grouped
/// (non-decreasing), matching the task-major layout of
/// [`crate::kernels::gram_extended`]. The Gram must be PSD up to −1e-8.
pub fn train_kernel(
    gram: &Array2<f64>,
    task_index: &[usize],
    labels_flat: &[usize],
    c: usize,
    kind: LossKind,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<KernelModel> {
    train_kernel_with_info(gram, task_index, labels_flat, c, kind, lambda, opts).map(|(m, _)| m)
}

pub fn train_kernel_with_info(
    gram: &Array2<f64>,
    task_index: &[usize],
    labels_flat: &[usize],
    c: usize,
    kind: LossKind,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<(KernelModel, FitInfo)> {
    let m = gram.nrows();
    if gram.ncols() != m {
        return Err(Error::DimensionMismatch(gram.ncols(), m));
    }
    if m > KERNEL_TRAIN_CAP {
        return Err(Error::TooLarge { actual: m, cap: KERNEL_TRAIN_CAP });
    }
    if task_index.len() != m || labels_flat.len() != m {
        return Err(Error::DimensionMismatch(task_index.len(), m));
    }
    if !crate::linalg::is_psd_within(gram, 1e-8) {
        return Err(Error::NotPsd);
    }
    let mut sizes = Vec::new();
    let mut labels: Vec<Vec<usize>> = Vec::new();
    let mut prev: Option<usize> = None;
    for (&ti, &y) in task_index.iter().zip(labels_flat) {
        match prev {
            Some(p) if ti == p => {
                *sizes.last_mut().unwrap() += 1;
                labels.last_mut().unwrap().push(y);
            }
            Some(p) if ti < p => {
                return Err(Error::InvalidParam("task_index must be grouped (non-decreasing)".into()))
            }
            _ => {
                sizes.push(1);
                labels.push(vec![y]);
            }
        }
        prev = Some(ti);
    }
    let design = KernelDesign { gram, sizes };
    let (alpha, info) = minimize(&design, &labels, c, kind, lambda, opts)?;
    Ok((KernelModel { alpha, lambda, loss_kind: kind }, info))
}

/// Objective of a kernel model (data term plus `λ Σ_m α_m K α_mᵀ`).
pub fn kernel_objective(
    model: &KernelModel,
    gram: &Array2<f64>,
    task_index: &[usize],
    labels_flat: &[usize],
) -> Result<f64> {
    let mut sizes = Vec::new();
    let mut labels: Vec<Vec<usize>> = Vec::new();
    let mut prev = None;
    for (&ti, &y) in task_index.iter().zip(labels_flat) {
        if prev == Some(ti) {
            *sizes.last_mut().unwrap() += 1;
            labels.last_mut().unwrap().push(y);
        } else {
            sizes.push(1);
            labels.push(vec![y]);
        }
        prev = Some(ti);
    }
    let design = KernelDesign { gram, sizes };
    let weights = sample_weights(&design.group_sizes());
    let scores = design.scores(&model.alpha);
    Ok(loss_at(&scores, None, labels.as_slice(), model.loss_kind, &weights)
        + model.lambda * design.reg_value(&model.alpha))
}

/// Scores of the kernel model on columns of a cross-Gram matrix
/// `K_cross[train_point, eval_point]`: the representer sum `α K_cross`.
pub fn kernel_scores(model: &KernelModel, cross_gram: &Array2<f64>) -> Array2<f64> {
    model.alpha.dot(cross_gram)
}
