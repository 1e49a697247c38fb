//! Run configuration: estimator choice, sampling constants, and the flat
//! JSON config file that can supply any of them.

use std::fs::File;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{AppError, AppResult};

/// Default Monte Carlo sample count.
pub const DEFAULT_R: usize = 20_000;
/// Default truncation tolerance of the tile-low-rank factorization.
pub const DEFAULT_TRUNC_TOL: f64 = 1e-4;
/// Default kernel-sharpness grid for likelihood maximization.
pub const DEFAULT_GRID: (f64, f64, usize) = (15.0, 45.0, 60);
/// Default coordinate-ascent convergence tolerance.
pub const DEFAULT_CAVI_TOL: f64 = 1e-6;
/// Default cap on coordinate-ascent sweeps.
pub const DEFAULT_CAVI_MAX_ITER: usize = 200;
/// Default seed when neither flag nor config file supplies one.
pub const DEFAULT_SEED: u64 = 0;

/// Which predictive estimator a run uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Ratio of Gaussian CDFs over a tile-low-rank factor.
    Tlr,
    /// Mean-field truncated-normal plug-in average.
    Vb,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Tlr => "tlr",
            Method::Vb => "vb",
        }
    }
}

impl FromStr for Method {
    type Err = AppError;

    fn from_str(s: &str) -> AppResult<Self> {
        match s {
            "tlr" => Ok(Method::Tlr),
            "vb" => Ok(Method::Vb),
            other => Err(AppError::Invalid(format!(
                "unknown method {other:?}; expected \"tlr\" or \"vb\""
            ))),
        }
    }
}

/// Kernel sharpness: either a fixed value or a search grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlphaSpec {
    Fixed(f64),
    Grid { min: f64, max: f64, count: usize },
}

/// Everything a likelihood or prediction run needs besides the data.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub method: Method,
    pub r: usize,
    pub seed: u64,
    /// Tile edge of the factorization; `None` means ceil(sqrt(n)).
    pub block_size: Option<usize>,
    pub trunc_tol: f64,
    pub alpha: AlphaSpec,
    pub cavi_tol: f64,
    pub cavi_max_iter: usize,
}

impl RunConfig {
    /// Validates field ranges shared by every subcommand.
    pub fn validate(&self) -> AppResult<()> {
        if self.r < 2 {
            return Err(AppError::Invalid("r must be at least 2".into()));
        }
        if self.block_size == Some(0) {
            return Err(AppError::Invalid("block_size must be positive".into()));
        }
        if !(self.trunc_tol > 0.0) || !self.trunc_tol.is_finite() {
            return Err(AppError::Invalid("trunc_tol must be a positive finite number".into()));
        }
        if !(self.cavi_tol > 0.0) || !self.cavi_tol.is_finite() {
            return Err(AppError::Invalid("cavi_tol must be a positive finite number".into()));
        }
        if self.cavi_max_iter == 0 {
            return Err(AppError::Invalid("cavi_max_iter must be positive".into()));
        }
        match self.alpha {
            AlphaSpec::Fixed(a) => validate_alpha(a)?,
            AlphaSpec::Grid { min, max, count } => {
                validate_alpha(min)?;
                validate_alpha(max)?;
                if min > max {
                    return Err(AppError::Invalid("alpha grid needs min <= max".into()));
                }
                if count == 0 {
                    return Err(AppError::Invalid("alpha grid count must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Tile edge used for an n-point training set.
    pub fn block_size_for(&self, n: usize) -> usize {
        self.block_size.unwrap_or_else(|| default_block_size(n))
    }

    /// The fixed kernel sharpness, or an error when a grid was supplied to an
    /// operation that needs a single value.
    pub fn fixed_alpha(&self) -> AppResult<f64> {
        match self.alpha {
            AlphaSpec::Fixed(a) => Ok(a),
            AlphaSpec::Grid { .. } => Err(AppError::Invalid(
                "this operation needs a single alpha; run fit-alpha to pick one from a grid"
                    .into(),
            )),
        }
    }
}

pub fn validate_alpha(a: f64) -> AppResult<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(AppError::Invalid("alpha must be a positive finite number".into()));
    }
    Ok(())
}

/// ceil(sqrt(n)), the default tile edge.
pub fn default_block_size(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).max(1)
}

/// Optional flat key-value JSON file supplying defaults for any flag.
/// Explicit command-line flags always win over file values.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub method: Option<String>,
    pub r: Option<usize>,
    pub seed: Option<u64>,
    pub block_size: Option<usize>,
    pub trunc_tol: Option<f64>,
    pub alpha: Option<f64>,
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
    pub alpha_count: Option<usize>,
    pub cavi_tol: Option<f64>,
    pub cavi_max_iter: Option<usize>,
    pub grid_size: Option<usize>,
    pub holdout_scheme: Option<String>,
    pub holdout_count: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> AppResult<Self> {
        let file = File::open(path).map_err(|e| AppError::io(path, e))?;
        serde_json::from_reader(file).map_err(|e| AppError::format(path, e.to_string()))
    }
}
