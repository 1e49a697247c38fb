//! `probit-gp`: simulate classification data from a Gaussian-process probit
//! model, evaluate its marginal likelihood, and compute predictive
//! probabilities with either estimator.
//!
//! Output artifacts depend only on the configuration and seed; wall-clock
//! diagnostics go to stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use probit_gp::{marginal_likelihood, LikelihoodMethod, McConfig};
use probit_gp_cli::config::{
    self, AlphaSpec, FileConfig, Method, RunConfig, DEFAULT_GRID, DEFAULT_SEED,
};
use probit_gp_cli::dataset::{self, HoldoutScheme};
use probit_gp_cli::error::{AppError, AppResult};
use probit_gp_cli::harness;

/// Environment variable bounding the worker-thread count. Results are
/// invariant to it; only wall-clock changes.
const WORKER_ENV: &str = "PROBIT_GP_WORKERS";

#[derive(Parser)]
#[command(
    name = "probit-gp",
    version,
    about = "Gaussian-process probit classification: simulation, likelihood, prediction"
)]
struct Cli {
    /// Flat key-value JSON file supplying defaults for any flag
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct McFlags {
    /// Monte Carlo samples per estimate
    #[arg(long)]
    r: Option<usize>,
    /// Seed driving every random draw
    #[arg(long)]
    seed: Option<u64>,
    /// Tile edge of the factorization (default: ceil(sqrt(n)))
    #[arg(long)]
    block_size: Option<usize>,
    /// Singular-value cutoff of tile compression, relative to the leading one
    #[arg(long)]
    trunc_tol: Option<f64>,
}

#[derive(Args, Default)]
struct CaviFlags {
    /// Convergence threshold on the largest mean update per sweep
    #[arg(long)]
    cavi_tol: Option<f64>,
    /// Cap on coordinate-ascent sweeps
    #[arg(long)]
    cavi_max_iter: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a gridded training set plus holdout points from the model
    Simulate {
        /// Training locations per axis (n = grid_size^2)
        #[arg(long)]
        grid_size: Option<usize>,
        /// Kernel sharpness of the simulated surface
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Holdout placement: "random" or "grid"
        #[arg(long)]
        holdout_scheme: Option<String>,
        #[arg(long)]
        holdout_count: Option<usize>,
        /// Output CSV of training rows (x1..xq, y)
        #[arg(long, default_value = "train.csv")]
        out_train: PathBuf,
        /// Output CSV of holdout rows (x1..xq, truth_prob, y)
        #[arg(long, default_value = "holdout.csv")]
        out_holdout: PathBuf,
    },
    /// Estimate the marginal likelihood of the training responses
    Loglik {
        /// Training CSV (x1..xq, y)
        #[arg(long)]
        train: PathBuf,
        /// Kernel sharpness
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        mc: McFlags,
    },
    /// Pick the kernel sharpness maximizing the marginal likelihood on a grid
    FitAlpha {
        /// Training CSV (x1..xq, y)
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        alpha_min: Option<f64>,
        #[arg(long)]
        alpha_max: Option<f64>,
        #[arg(long)]
        alpha_count: Option<usize>,
        /// Optional output CSV of the evaluated curve (alpha, estimate, std_error)
        #[arg(long)]
        out_curve: Option<PathBuf>,
        #[command(flatten)]
        mc: McFlags,
    },
    /// Predict every holdout point with the selected estimator
    Predict {
        /// Training CSV (x1..xq, y)
        #[arg(long)]
        train: PathBuf,
        /// Holdout CSV (x1..xq[, truth_prob][, y])
        #[arg(long)]
        holdout: PathBuf,
        /// Estimator: "tlr" or "vb"
        #[arg(long)]
        method: Option<String>,
        /// Kernel sharpness
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        mc: McFlags,
        #[command(flatten)]
        cavi: CaviFlags,
        /// Output CSV of predictions (id, probability, std_error)
        #[arg(long, default_value = "predictions.csv")]
        out_predictions: PathBuf,
        /// Output JSON of quality metrics
        #[arg(long, default_value = "metrics.json")]
        out_metrics: PathBuf,
    },
    /// Run both estimators on the same holdout set and report timings
    Benchmark {
        /// Training CSV (x1..xq, y)
        #[arg(long)]
        train: PathBuf,
        /// Holdout CSV (x1..xq[, truth_prob][, y])
        #[arg(long)]
        holdout: PathBuf,
        /// Kernel sharpness
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        mc: McFlags,
        #[command(flatten)]
        cavi: CaviFlags,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    if let Err(e) = init_worker_pool() {
        eprintln!("probit-gp: {e}");
        return ExitCode::from(1);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("probit-gp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn init_worker_pool() -> AppResult<()> {
    let v = match std::env::var(WORKER_ENV) {
        Err(std::env::VarError::NotPresent) => return Ok(()),
        Err(e) => return Err(AppError::Invalid(format!("{WORKER_ENV}: {e}"))),
        Ok(v) => v,
    };
    let workers: usize = v.trim().parse().map_err(|_| {
        AppError::Invalid(format!("{WORKER_ENV} must be a positive integer, got {v:?}"))
    })?;
    if workers == 0 {
        return Err(AppError::Invalid(format!("{WORKER_ENV} must be at least 1")));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| AppError::Invalid(format!("worker pool: {e}")))
}

fn run(cli: Cli) -> AppResult<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Simulate {
            grid_size,
            alpha,
            seed,
            holdout_scheme,
            holdout_count,
            out_train,
            out_holdout,
        } => {
            let grid_size = grid_size
                .or(file.grid_size)
                .ok_or_else(|| AppError::Invalid("grid_size is required".into()))?;
            let alpha = require_alpha(alpha.or(file.alpha))?;
            let seed = seed.or(file.seed).unwrap_or(DEFAULT_SEED);
            let scheme: HoldoutScheme = holdout_scheme
                .or_else(|| file.holdout_scheme.clone())
                .as_deref()
                .unwrap_or("random")
                .parse()?;
            let holdout_count = holdout_count.or(file.holdout_count).unwrap_or(100);

            let ds = dataset::simulate_dataset(grid_size, alpha, seed, scheme, holdout_count)?;
            dataset::write_training_csv(&ds, &out_train)?;
            dataset::write_holdout_csv(&ds, &out_holdout)?;
            println!(
                "{}",
                serde_json::json!({
                    "n": ds.n(),
                    "holdout_count": holdout_count,
                    "alpha": alpha,
                    "seed": seed,
                    "train": out_train.display().to_string(),
                    "holdout": out_holdout.display().to_string(),
                })
            );
            Ok(())
        }
        Command::Loglik { train, alpha, mc } => {
            let ds = dataset::read_training_csv(&train)?;
            let alpha = require_alpha(alpha.or(file.alpha))?;
            let cfg = resolve_run_config(
                Method::Tlr,
                AlphaSpec::Fixed(alpha),
                &mc,
                &CaviFlags::default(),
                &file,
            )?;
            let model = harness::build_model(&ds, alpha)?;
            let method = LikelihoodMethod::Tlr {
                block_size: cfg.block_size_for(ds.n()),
                tol: cfg.trunc_tol,
            };
            let est = marginal_likelihood(
                &model,
                &McConfig { r: cfg.r, seed: cfg.seed, antithetic: false },
                &method,
            )?;
            println!(
                "{}",
                serde_json::json!({
                    "alpha": alpha,
                    "estimate": est.value,
                    "std_error": est.std_error,
                    "n": ds.n(),
                    "r": cfg.r,
                    "seed": cfg.seed,
                })
            );
            Ok(())
        }
        Command::FitAlpha { train, alpha_min, alpha_max, alpha_count, out_curve, mc } => {
            let ds = dataset::read_training_csv(&train)?;
            let grid = (
                alpha_min.or(file.alpha_min).unwrap_or(DEFAULT_GRID.0),
                alpha_max.or(file.alpha_max).unwrap_or(DEFAULT_GRID.1),
                alpha_count.or(file.alpha_count).unwrap_or(DEFAULT_GRID.2),
            );
            let cfg = resolve_run_config(
                Method::Tlr,
                AlphaSpec::Grid { min: grid.0, max: grid.1, count: grid.2 },
                &mc,
                &CaviFlags::default(),
                &file,
            )?;
            let fit = harness::estimate_alpha(&ds, grid, &cfg)?;
            if let Some(path) = &out_curve {
                write_curve_csv(&fit.curve, path)?;
            }
            println!(
                "{}",
                serde_json::json!({
                    "alpha_hat": fit.alpha_hat,
                    "alpha_min": grid.0,
                    "alpha_max": grid.1,
                    "alpha_count": grid.2,
                    "n": ds.n(),
                    "r": cfg.r,
                    "seed": cfg.seed,
                })
            );
            Ok(())
        }
        Command::Predict {
            train,
            holdout,
            method,
            alpha,
            mc,
            cavi,
            out_predictions,
            out_metrics,
        } => {
            let ds = dataset::read_training_csv(&train)?
                .with_holdout(dataset::read_holdout_csv(&holdout)?)?;
            let method = resolve_method(method, &file)?;
            let alpha = require_alpha(alpha.or(file.alpha))?;
            let cfg = resolve_run_config(method, AlphaSpec::Fixed(alpha), &mc, &cavi, &file)?;
            let out = harness::predict_batch(&ds, &cfg)?;

            write_predictions_csv(&out, &out_predictions)?;
            let metrics_text = serde_json::to_string_pretty(&out.report)
                .map_err(|e| AppError::Invalid(format!("metrics serialization: {e}")))?;
            std::fs::write(&out_metrics, format!("{metrics_text}\n"))
                .map_err(|e| AppError::io(&out_metrics, e))?;

            eprintln!(
                "fit: {:.6} s; prediction: {:.6} s/point over {} points",
                out.report.fit_seconds,
                out.report.per_prediction_seconds,
                out.estimates.len()
            );
            println!(
                "{}",
                serde_json::to_string(&out.report)
                    .map_err(|e| AppError::Invalid(format!("metrics serialization: {e}")))?
            );
            Ok(())
        }
        Command::Benchmark { train, holdout, alpha, mc, cavi } => {
            let ds = dataset::read_training_csv(&train)?
                .with_holdout(dataset::read_holdout_csv(&holdout)?)?;
            let alpha = require_alpha(alpha.or(file.alpha))?;
            let mut reports = serde_json::Map::new();
            for method in [Method::Tlr, Method::Vb] {
                let cfg =
                    resolve_run_config(method, AlphaSpec::Fixed(alpha), &mc, &cavi, &file)?;
                let out = harness::predict_batch(&ds, &cfg)?;
                eprintln!(
                    "{}: fit {:.6} s; prediction {:.6} s/point",
                    method.as_str(),
                    out.report.fit_seconds,
                    out.report.per_prediction_seconds
                );
                let value = serde_json::to_value(&out.report)
                    .map_err(|e| AppError::Invalid(format!("metrics serialization: {e}")))?;
                reports.insert(method.as_str().to_string(), value);
            }
            println!("{}", serde_json::Value::Object(reports));
            Ok(())
        }
    }
}

fn require_alpha(alpha: Option<f64>) -> AppResult<f64> {
    let a = alpha.ok_or_else(|| {
        AppError::Invalid("alpha is required (flag --alpha or config key \"alpha\")".into())
    })?;
    config::validate_alpha(a)?;
    Ok(a)
}

fn resolve_method(flag: Option<String>, file: &FileConfig) -> AppResult<Method> {
    match flag.or_else(|| file.method.clone()) {
        Some(s) => s.parse(),
        None => Ok(Method::Tlr),
    }
}

fn resolve_run_config(
    method: Method,
    alpha: AlphaSpec,
    mc: &McFlags,
    cavi: &CaviFlags,
    file: &FileConfig,
) -> AppResult<RunConfig> {
    let cfg = RunConfig {
        method,
        r: mc.r.or(file.r).unwrap_or(config::DEFAULT_R),
        seed: mc.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        block_size: mc.block_size.or(file.block_size),
        trunc_tol: mc.trunc_tol.or(file.trunc_tol).unwrap_or(config::DEFAULT_TRUNC_TOL),
        alpha,
        cavi_tol: cavi.cavi_tol.or(file.cavi_tol).unwrap_or(config::DEFAULT_CAVI_TOL),
        cavi_max_iter: cavi
            .cavi_max_iter
            .or(file.cavi_max_iter)
            .unwrap_or(config::DEFAULT_CAVI_MAX_ITER),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn write_curve_csv(curve: &[harness::CurvePoint], path: &Path) -> AppResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| AppError::format(path, e.to_string()))?;
    w.write_record(["alpha", "estimate", "std_error"])
        .map_err(|e| AppError::format(path, e.to_string()))?;
    for pt in curve {
        w.write_record([
            format!("{}", pt.alpha),
            format!("{}", pt.estimate),
            format!("{}", pt.std_error),
        ])
        .map_err(|e| AppError::format(path, e.to_string()))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

fn write_predictions_csv(out: &harness::BatchOutput, path: &Path) -> AppResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| AppError::format(path, e.to_string()))?;
    w.write_record(["id", "probability", "std_error"])
        .map_err(|e| AppError::format(path, e.to_string()))?;
    for (id, est) in out.estimates.iter().enumerate() {
        w.write_record([
            format!("{id}"),
            format!("{}", est.value),
            format!("{}", est.std_error),
        ])
        .map_err(|e| AppError::format(path, e.to_string()))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}
