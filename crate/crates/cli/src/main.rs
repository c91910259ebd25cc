//! `dg` — command-line driver for kernel-based multiclass domain
//! generalization.
//!
//! Subcommands: `gen-data`, `train`, `eval`, `cv`, `bench`, `bound`.
//!
//! Conventions:
//! - stdout carries human-readable summaries; output files carry
//!   machine-readable CSV/JSON; the two never mix.
//! - every run writes a manifest JSON echoing the fully-resolved
//!   configuration (seeds, grids, dimensions) next to its output.
//! - flags override values from an optional `--config` JSON file whose keys
//!   mirror the long flag names.
//! - exit codes: 0 success, 1 usage error, 2 data/I-O error, 3 numeric
//!   failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use dg_core::data;
use dg_core::dg::{self, BenchmarkSpec, GridSpec, Grids, RffDims, TaskSource};
use dg_core::kernels::KernelConfig;
use dg_core::losses::LossKind;
use dg_core::solver::SolverOptions;
use dg_core::{bound, Error as CoreError};

#[derive(Parser)]
#[command(name = "dg", version, about = "kernel-based multiclass domain generalization")]
struct Cli {
    /// Worker threads (0 = auto). Output is identical for any value.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a task-collection directory.
    GenData(GenDataArgs),
    /// Fit a model on a task-collection directory and save it.
    Train(TrainArgs),
    /// Evaluate a saved model on a task-collection directory.
    Eval(EvalArgs),
    /// Task-level cross-validation over a hyperparameter grid.
    Cv(CvArgs),
    /// Proposed method vs pooling, repeated with child seeds.
    Bench(BenchArgs),
    /// Bound calculator: parameter sweeps and the concentration experiment.
    Bound(BoundArgs),
}

fn usage_err(msg: impl Into<String>) -> CliError {
    CliError { code: 1, msg: msg.into() }
}

struct CliError {
    code: u8,
    msg: String,
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::InvalidParam(_) => 1,
            CoreError::Diverged | CoreError::NotPsd => 3,
            _ => 2,
        };
        CliError { code, msg: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError { code: 2, msg: e.to_string() }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError { code: 2, msg: format!("bad JSON: {e}") }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not errors
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: could not configure thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::GenData(args) => cmd_gen_data(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Cv(args) => cmd_cv(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Bound(args) => cmd_bound(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}

/// Read an optional JSON config file into the given args type; the caller
/// then overlays CLI flags on top.
fn load_config<T: for<'de> Deserialize<'de> + Default>(path: &Option<PathBuf>) -> Result<T, CliError> {
    match path {
        Some(p) => Ok(serde_json::from_str(&std::fs::read_to_string(p)?)?),
        None => Ok(T::default()),
    }
}

fn write_manifest(path: &Path, manifest: &impl Serialize) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(manifest)?;
    std::fs::write(path, json)?;
    Ok(())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<T>().map_err(|_| usage_err(format!("bad {what} entry '{p}'"))))
        .collect()
}

// ---------------------------------------------------------------------------
// gen-data

#[derive(Args)]
struct GenDataArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset: synthetic | mnist
    #[arg(long)]
    dataset: Option<String>,
    /// Number of tasks.
    #[arg(long)]
    tasks: Option<usize>,
    /// Points per task (synthetic).
    #[arg(long)]
    n: Option<usize>,
    /// IDX image file (mnist).
    #[arg(long)]
    images: Option<PathBuf>,
    /// IDX label file (mnist).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Pool size per task (mnist).
    #[arg(long)]
    images_per_task: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Default, Serialize, Deserialize)]
#[serde(default)]
struct GenDataConfig {
    dataset: Option<String>,
    tasks: Option<usize>,
    n: Option<usize>,
    images: Option<PathBuf>,
    labels: Option<PathBuf>,
    images_per_task: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

fn cmd_gen_data(args: GenDataArgs) -> Result<(), CliError> {
    let file: GenDataConfig = load_config(&args.config)?;
    let dataset = args.dataset.or(file.dataset).unwrap_or_else(|| "synthetic".into());
    let tasks = args.tasks.or(file.tasks).unwrap_or(100);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let out = args.out.or(file.out).ok_or_else(|| usage_err("--out is required"))?;
    if tasks == 0 {
        return Err(usage_err("--tasks must be >= 1"));
    }

    let (coll, resolved) = match dataset.as_str() {
        "synthetic" => {
            let n = args.n.or(file.n).unwrap_or(100);
            if n == 0 {
                return Err(usage_err("--n must be >= 1"));
            }
            let coll = data::generate_synthetic(tasks, n, seed)?;
            let resolved = serde_json::json!({
                "command": "gen-data", "dataset": "synthetic",
                "tasks": tasks, "n": n, "seed": seed, "out": out,
            });
            (coll, resolved)
        }
        "mnist" => {
            let images = args.images.or(file.images).ok_or_else(|| usage_err("--images required for mnist"))?;
            let labels = args.labels.or(file.labels).ok_or_else(|| usage_err("--labels required for mnist"))?;
            let per = args.images_per_task.or(file.images_per_task).unwrap_or(1000);
            let (im, lb) = data::load_idx(&images, &labels)?;
            let coll = data::make_mnist_mod(&im, &lb, tasks, per, seed)?;
            let resolved = serde_json::json!({
                "command": "gen-data", "dataset": "mnist",
                "tasks": tasks, "images_per_task": per, "seed": seed,
                "images": images, "labels": labels, "out": out,
            });
            (coll, resolved)
        }
        other => return Err(usage_err(format!("unknown dataset '{other}' (synthetic | mnist)"))),
    };
    data::save_collection(&out, &coll)?;
    write_manifest(&out.join("run_manifest.json"), &resolved)?;
    println!(
        "wrote {} tasks ({} points each, {} classes, d={}) to {}",
        coll.len(),
        coll.tasks[0].len(),
        coll.c,
        coll.d,
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// shared train/eval/cv plumbing

#[derive(Args, Clone)]
struct HyperArgs {
    /// Feature dimension for all three maps (overridden by --d1/--d2/--d3).
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    d1: Option<usize>,
    #[arg(long)]
    d2: Option<usize>,
    #[arg(long)]
    d3: Option<usize>,
    /// σ_x as a multiple of the median heuristic.
    #[arg(long)]
    sx_mult: Option<f64>,
    /// σ_x' as a multiple of the median heuristic.
    #[arg(long)]
    sxp_mult: Option<f64>,
    /// σ_κ as a multiple of the median embedding distance.
    #[arg(long)]
    sk_mult: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Loss: crammer_singer | multinomial_logistic | weston_watkins | lee
    #[arg(long)]
    loss: Option<String>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Default, Serialize, Deserialize, Clone)]
#[serde(default)]
struct HyperConfig {
    d: Option<usize>,
    d1: Option<usize>,
    d2: Option<usize>,
    d3: Option<usize>,
    sx_mult: Option<f64>,
    sxp_mult: Option<f64>,
    sk_mult: Option<f64>,
    lambda: Option<f64>,
    loss: Option<String>,
    max_iters: Option<usize>,
    tol: Option<f64>,
}

#[derive(Serialize, Clone)]
struct ResolvedHyper {
    dims: RffDims,
    sx_mult: f64,
    sxp_mult: f64,
    sk_mult: f64,
    lambda: f64,
    loss: LossKind,
    max_iters: usize,
    tol: f64,
}

fn resolve_hyper(cli: &HyperArgs, file: &HyperConfig) -> Result<ResolvedHyper, CliError> {
    let d = cli.d.or(file.d).unwrap_or(1024);
    let dims = RffDims {
        d1: cli.d1.or(file.d1).unwrap_or(d),
        d2: cli.d2.or(file.d2).unwrap_or(d),
        d3: cli.d3.or(file.d3).unwrap_or(d),
    };
    let loss: LossKind = cli
        .loss
        .clone()
        .or_else(|| file.loss.clone())
        .unwrap_or_else(|| "multinomial_logistic".into())
        .parse()
        .map_err(|e: CoreError| usage_err(e.to_string()))?;
    Ok(ResolvedHyper {
        dims,
        sx_mult: cli.sx_mult.or(file.sx_mult).unwrap_or(0.15),
        sxp_mult: cli.sxp_mult.or(file.sxp_mult).unwrap_or(1.0),
        sk_mult: cli.sk_mult.or(file.sk_mult).unwrap_or(0.2),
        lambda: cli.lambda.or(file.lambda).unwrap_or(1e-4),
        loss,
        max_iters: cli.max_iters.or(file.max_iters).unwrap_or(200),
        tol: cli.tol.or(file.tol).unwrap_or(1e-6),
    })
}

fn bandwidths(
    train: &data::DomainCollection,
    hyper: &ResolvedHyper,
    seed: u64,
) -> Result<KernelConfig, CliError> {
    let base = dg::median_heuristic(train, dg_core::rng::mix_seed(seed, 22))?;
    let base_k = dg::median_embedding_distance(
        train,
        hyper.sxp_mult * base,
        hyper.dims.d1,
        dg_core::rng::mix_seed(seed, 23),
    )?;
    Ok(KernelConfig::new(hyper.sx_mult * base, hyper.sxp_mult * base, hyper.sk_mult * base_k)?)
}

// ---------------------------------------------------------------------------
// train

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Task-collection directory.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Method: dg | pooling
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output model file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Default, Serialize, Deserialize)]
#[serde(default)]
struct TrainConfig {
    data: Option<PathBuf>,
    method: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    #[serde(flatten)]
    hyper: HyperConfig,
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let file: TrainConfig = load_config(&args.config)?;
    let data_dir = args.data.or(file.data).ok_or_else(|| usage_err("--data is required"))?;
    let out = args.out.or(file.out).ok_or_else(|| usage_err("--out is required"))?;
    let method = args.method.or(file.method).unwrap_or_else(|| "dg".into());
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let hyper = resolve_hyper(&args.hyper, &file.hyper)?;
    let opts = SolverOptions { max_iters: hyper.max_iters, tol: hyper.tol };

    let train = data::load_collection(&data_dir)?;
    let config = bandwidths(&train, &hyper, seed)?;
    let model = match method.as_str() {
        "dg" => dg::ModelFile::Dg(Box::new(dg::fit_dg(&train, &config, hyper.dims, hyper.loss, hyper.lambda, &opts, seed)?)),
        "pooling" => dg::ModelFile::Pooling(dg::fit_pooling(
            &train,
            config.sigma_x,
            hyper.dims.d3,
            hyper.loss,
            hyper.lambda,
            &opts,
            seed,
        )?),
        other => return Err(usage_err(format!("unknown method '{other}' (dg | pooling)"))),
    };
    dg::save_model(&out, &model)?;
    let manifest = serde_json::json!({
        "command": "train", "data": data_dir, "method": method, "seed": seed,
        "hyper": hyper, "bandwidths": config, "out": out,
    });
    write_manifest(&manifest_path(&out), &manifest)?;
    println!(
        "trained {method} model on {} tasks (c={}, d={}) -> {}",
        train.len(),
        train.c,
        train.d,
        out.display()
    );
    Ok(())
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

// ---------------------------------------------------------------------------
// eval

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Output CSV of per-task errors.
    #[arg(long)]
    out: PathBuf,
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let model = dg::load_model(&args.model)?;
    let test = data::load_collection(&args.data)?;
    let report = model.evaluate(&test)?;
    let mut csv = String::from("task_id,error_pct\n");
    for (id, err) in &report.per_task_error {
        csv.push_str(&format!("{},{}\n", id, 100.0 * err));
    }
    std::fs::write(&args.out, csv)?;
    let manifest = serde_json::json!({
        "command": "eval", "model": args.model, "data": args.data, "out": args.out,
        "mean_error_pct": 100.0 * report.mean_error,
        "std_error_pct": 100.0 * report.std_error,
        "model_config": report.config,
    });
    write_manifest(&manifest_path(&args.out), &manifest)?;
    println!(
        "error over {} tasks: {:.2}% (±{:.2})",
        report.per_task_error.len(),
        100.0 * report.mean_error,
        100.0 * report.std_error
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// cv

#[derive(Args)]
struct CvArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    folds: Option<usize>,
    /// Comma-separated σ_x multipliers.
    #[arg(long)]
    sx_mults: Option<String>,
    /// Comma-separated σ_x' multipliers.
    #[arg(long)]
    sxp_mults: Option<String>,
    /// Comma-separated σ_κ multipliers.
    #[arg(long)]
    sk_mults: Option<String>,
    /// Comma-separated λ values.
    #[arg(long)]
    lambdas: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV of the full CV table.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Default, Serialize, Deserialize)]
#[serde(default)]
struct CvConfig {
    data: Option<PathBuf>,
    folds: Option<usize>,
    sx_mults: Option<String>,
    sxp_mults: Option<String>,
    sk_mults: Option<String>,
    lambdas: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    #[serde(flatten)]
    hyper: HyperConfig,
}

fn cmd_cv(args: CvArgs) -> Result<(), CliError> {
    let file: CvConfig = load_config(&args.config)?;
    let data_dir = args.data.or(file.data).ok_or_else(|| usage_err("--data is required"))?;
    let out = args.out.or(file.out).ok_or_else(|| usage_err("--out is required"))?;
    let folds = args.folds.or(file.folds).unwrap_or(5);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let hyper = resolve_hyper(&args.hyper, &file.hyper)?;
    let opts = SolverOptions { max_iters: hyper.max_iters, tol: hyper.tol };

    let sx_mults: Vec<f64> = parse_list(
        &args.sx_mults.or(file.sx_mults).unwrap_or_else(|| "0.1,0.3,1".into()),
        "--sx-mults",
    )?;
    let sxp_mults: Vec<f64> =
        parse_list(&args.sxp_mults.or(file.sxp_mults).unwrap_or_else(|| "1".into()), "--sxp-mults")?;
    let sk_mults: Vec<f64> =
        parse_list(&args.sk_mults.or(file.sk_mults).unwrap_or_else(|| "0.2,1".into()), "--sk-mults")?;
    let lambdas: Vec<f64> =
        parse_list(&args.lambdas.or(file.lambdas).unwrap_or_else(|| "1e-4,1e-2".into()), "--lambdas")?;

    let train = data::load_collection(&data_dir)?;
    let base = dg::median_heuristic(&train, dg_core::rng::mix_seed(seed, 22))?;
    let base_k = dg::median_embedding_distance(
        &train,
        base,
        hyper.dims.d1,
        dg_core::rng::mix_seed(seed, 23),
    )?;
    let grids = Grids {
        sigma_x: sx_mults.iter().map(|m| m * base).collect(),
        sigma_xp: sxp_mults.iter().map(|m| m * base).collect(),
        sigma_kappa: sk_mults.iter().map(|m| m * base_k).collect(),
        lambda: lambdas.clone(),
    };
    let (best, table) = dg::cross_validate(&train, &grids, folds, hyper.loss, hyper.dims, &opts, seed)?;

    let mut csv = String::from("sigma_x,sigma_xp,sigma_kappa,lambda,cv_error_pct\n");
    for cell in &table {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            cell.config.sigma_x,
            cell.config.sigma_xp,
            cell.config.sigma_kappa,
            cell.lambda,
            100.0 * cell.cv_error
        ));
    }
    std::fs::write(&out, csv)?;
    let manifest = serde_json::json!({
        "command": "cv", "data": data_dir, "folds": folds, "seed": seed,
        "grids": grids, "hyper": hyper, "best": best, "out": out,
    });
    write_manifest(&manifest_path(&out), &manifest)?;
    println!(
        "best cell: sigma_x={:.4} sigma_xp={:.4} sigma_kappa={:.4} lambda={} cv_error={:.2}%",
        best.config.sigma_x,
        best.config.sigma_xp,
        best.config.sigma_kappa,
        best.lambda,
        100.0 * best.cv_error
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// bench

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset: synthetic | mnist | generic
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    tasks: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    images: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    images_per_task: Option<usize>,
    /// Generic collection directory.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Training tasks per repetition split.
    #[arg(long)]
    train_tasks: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    /// Comma-separated grid multipliers (single values skip fold fitting).
    #[arg(long)]
    sx_mults: Option<String>,
    #[arg(long)]
    sxp_mults: Option<String>,
    #[arg(long)]
    sk_mults: Option<String>,
    #[arg(long)]
    lambdas: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Default, Serialize, Deserialize)]
#[serde(default)]
struct BenchConfig {
    dataset: Option<String>,
    tasks: Option<usize>,
    n: Option<usize>,
    images: Option<PathBuf>,
    labels: Option<PathBuf>,
    images_per_task: Option<usize>,
    data: Option<PathBuf>,
    train_tasks: Option<usize>,
    reps: Option<usize>,
    folds: Option<usize>,
    sx_mults: Option<String>,
    sxp_mults: Option<String>,
    sk_mults: Option<String>,
    lambdas: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    #[serde(flatten)]
    hyper: HyperConfig,
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let file: BenchConfig = load_config(&args.config)?;
    let dataset = args.dataset.or(file.dataset).unwrap_or_else(|| "synthetic".into());
    let out = args.out.or(file.out).ok_or_else(|| usage_err("--out is required"))?;
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let reps = args.reps.or(file.reps).unwrap_or(10);
    let folds = args.folds.or(file.folds).unwrap_or(5);
    let hyper = resolve_hyper(&args.hyper, &file.hyper)?;

    let tasks = args.tasks.or(file.tasks).unwrap_or(100);
    let source = match dataset.as_str() {
        "synthetic" => TaskSource::Synthetic {
            num_tasks: tasks,
            n_per_task: args.n.or(file.n).unwrap_or(100),
        },
        "mnist" => {
            let images = args.images.or(file.images).ok_or_else(|| usage_err("--images required for mnist"))?;
            let labels = args.labels.or(file.labels).ok_or_else(|| usage_err("--labels required for mnist"))?;
            let (im, lb) = data::load_idx(&images, &labels)?;
            TaskSource::RotatedPool {
                images: im,
                labels: lb,
                num_tasks: tasks,
                images_per_task: args.images_per_task.or(file.images_per_task).unwrap_or(1000),
            }
        }
        "generic" => {
            let dir = args.data.or(file.data).ok_or_else(|| usage_err("--data required for generic"))?;
            if !dir.is_dir() {
                return Err(CliError { code: 2, msg: format!("no such collection directory: {}", dir.display()) });
            }
            TaskSource::Directory(dir)
        }
        other => return Err(usage_err(format!("unknown dataset '{other}' (synthetic | mnist | generic)"))),
    };
    let n_train = args.train_tasks.or(file.train_tasks).unwrap_or(tasks * 4 / 5);

    let single = |v: f64| v.to_string();
    let grids = GridSpec {
        sigma_x_mults: parse_list(
            &args.sx_mults.or(file.sx_mults).unwrap_or_else(|| single(0.15)),
            "--sx-mults",
        )?,
        sigma_xp_mults: parse_list(
            &args.sxp_mults.or(file.sxp_mults).unwrap_or_else(|| single(1.0)),
            "--sxp-mults",
        )?,
        sigma_kappa_mults: parse_list(
            &args.sk_mults.or(file.sk_mults).unwrap_or_else(|| single(0.2)),
            "--sk-mults",
        )?,
        lambdas: parse_list(&args.lambdas.or(file.lambdas).unwrap_or_else(|| single(1e-4)), "--lambdas")?,
    };

    let spec = BenchmarkSpec {
        source,
        n_train,
        reps,
        dims: hyper.dims,
        pool_dim: 0,
        loss: hyper.loss,
        grids: grids.clone(),
        folds,
        solver: SolverOptions { max_iters: hyper.max_iters, tol: hyper.tol },
        seed,
    };
    let rows = dg::benchmark(&spec)?;
    std::fs::write(&out, dg::rows_to_csv(&rows))?;

    let rep_seeds: Vec<u64> = (0..reps).map(|r| dg_core::rng::mix_seed(seed, r as u64)).collect();
    let manifest = serde_json::json!({
        "command": "bench", "dataset": dataset, "tasks": tasks, "train_tasks": n_train,
        "reps": reps, "folds": folds, "seed": seed, "rep_seeds": rep_seeds,
        "grids": grids, "hyper": hyper, "out": out,
    });
    write_manifest(&manifest_path(&out), &manifest)?;

    for s in dg::summarize(&rows) {
        println!(
            "{:>9}: {:.2}% (±{:.2}) over {} reps",
            s.method, s.mean_error_pct, s.std_error_pct, s.reps
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// bound

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sweep one parameter: c | n-tasks | n | delta | p | r
    #[arg(long)]
    sweep: Option<String>,
    /// Comma-separated sweep values.
    #[arg(long)]
    values: Option<String>,
    /// Run the embedding-concentration Monte Carlo experiment instead.
    #[arg(long, default_value_t = false)]
    mc: bool,
    /// Comma-separated sample sizes for --mc.
    #[arg(long)]
    n_list: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// Input dimension for --mc.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    l_ell: Option<f64>,
    #[arg(long)]
    l_kappa: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    b_y: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    n_tasks: Option<usize>,
    #[arg(long)]
    n_per_task: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Default, Serialize, Deserialize)]
#[serde(default)]
struct BoundConfig {
    sweep: Option<String>,
    values: Option<String>,
    mc: Option<bool>,
    n_list: Option<String>,
    trials: Option<usize>,
    dim: Option<usize>,
    sigma: Option<f64>,
    l_ell: Option<f64>,
    l_kappa: Option<f64>,
    alpha: Option<f64>,
    radius: Option<f64>,
    b_y: Option<f64>,
    p: Option<f64>,
    classes: Option<usize>,
    n_tasks: Option<usize>,
    n_per_task: Option<usize>,
    delta: Option<f64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

fn cmd_bound(args: BoundArgs) -> Result<(), CliError> {
    let file: BoundConfig = load_config(&args.config)?;
    let out = args.out.or(file.out).ok_or_else(|| usage_err("--out is required"))?;
    let delta = args.delta.or(file.delta).unwrap_or(0.05);
    if !(delta > 0.0 && delta < 1.0) {
        return Err(usage_err(format!("--delta must be in (0,1), got {delta}")));
    }

    let mut params = bound::BoundParams::unit(
        args.classes.or(file.classes).unwrap_or(10),
        args.n_tasks.or(file.n_tasks).unwrap_or(100),
        args.n_per_task.or(file.n_per_task).unwrap_or(100),
        args.p.or(file.p).unwrap_or(2.0),
        delta,
    );
    if let Some(v) = args.l_ell.or(file.l_ell) {
        params.l_ell = v;
    }
    if let Some(v) = args.l_kappa.or(file.l_kappa) {
        params.l_kappa = v;
    }
    if let Some(v) = args.alpha.or(file.alpha) {
        params.alpha = v;
    }
    if let Some(v) = args.radius.or(file.radius) {
        params.r = v;
    }
    if let Some(v) = args.b_y.or(file.b_y) {
        params.b_y = v;
    }

    if args.mc || file.mc.unwrap_or(false) {
        let n_list: Vec<usize> = parse_list(
            &args.n_list.or(file.n_list).unwrap_or_else(|| "100,400,1600".into()),
            "--n-list",
        )?;
        let trials = args.trials.or(file.trials).unwrap_or(500);
        let dim = args.dim.or(file.dim).unwrap_or(5);
        let sigma = args.sigma.or(file.sigma).unwrap_or(1.0);
        let seed = args.seed.or(file.seed).unwrap_or(0);
        let rows = bound::embedding_concentration_mc(dim, &n_list, trials, sigma, delta, seed)?;
        let mut csv = String::from("n,quantile,hoeffding_bound\n");
        for r in &rows {
            csv.push_str(&format!("{},{},{}\n", r.n, r.quantile, r.hoeffding_bound));
        }
        std::fs::write(&out, csv)?;
        let manifest = serde_json::json!({
            "command": "bound", "mode": "mc", "n_list": n_list, "trials": trials,
            "dim": dim, "sigma": sigma, "delta": delta, "seed": seed, "out": out,
        });
        write_manifest(&manifest_path(&out), &manifest)?;
        for r in &rows {
            println!(
                "n={:>6}: empirical quantile {:.4} vs Hoeffding bound {:.4}",
                r.n, r.quantile, r.hoeffding_bound
            );
        }
        return Ok(());
    }

    let sweep = args.sweep.or(file.sweep).ok_or_else(|| usage_err("--sweep or --mc is required"))?;
    let values = args.values.or(file.values).ok_or_else(|| usage_err("--values is required"))?;
    let mut csv = String::from("param,value,term_one,term_two,bound_rhs\n");
    let mut printed = Vec::new();
    match sweep.as_str() {
        "c" => {
            for c in parse_list::<usize>(&values, "--values")? {
                params.c = c;
                push_bound_row(&mut csv, &mut printed, "c", c as f64, &params)?;
            }
        }
        "n-tasks" => {
            for n in parse_list::<usize>(&values, "--values")? {
                params.n_tasks = n;
                push_bound_row(&mut csv, &mut printed, "n-tasks", n as f64, &params)?;
            }
        }
        "n" => {
            for n in parse_list::<usize>(&values, "--values")? {
                params.n_per_task = n;
                push_bound_row(&mut csv, &mut printed, "n", n as f64, &params)?;
            }
        }
        "delta" => {
            for d in parse_list::<f64>(&values, "--values")? {
                params.delta = d;
                push_bound_row(&mut csv, &mut printed, "delta", d, &params)?;
            }
        }
        "p" => {
            for p in parse_list::<f64>(&values, "--values")? {
                params.p = p;
                push_bound_row(&mut csv, &mut printed, "p", p, &params)?;
            }
        }
        "r" => {
            for r in parse_list::<f64>(&values, "--values")? {
                params.r = r;
                push_bound_row(&mut csv, &mut printed, "r", r, &params)?;
            }
        }
        other => return Err(usage_err(format!("unknown sweep '{other}' (c | n-tasks | n | delta | p | r)"))),
    }
    std::fs::write(&out, csv)?;
    let manifest = serde_json::json!({
        "command": "bound", "mode": "sweep", "sweep": sweep, "values": values,
        "params": params, "out": out,
    });
    write_manifest(&manifest_path(&out), &manifest)?;
    for line in printed {
        println!("{line}");
    }
    Ok(())
}

fn push_bound_row(
    csv: &mut String,
    printed: &mut Vec<String>,
    name: &str,
    value: f64,
    params: &bound::BoundParams,
) -> Result<(), CliError> {
    let t1 = bound::term_one(params)?;
    let t2 = bound::term_two(params)?;
    csv.push_str(&format!("{name},{value},{t1},{t2},{}\n", t1 + t2));
    printed.push(format!("{name}={value}: term_one={t1:.6} term_two={t2:.6} bound={:.6}", t1 + t2));
    Ok(())
}
