//! Command-line harness around the probit Gaussian-process estimators:
//! dataset simulation from the generative model, marginal-likelihood
//! evaluation and grid search over the kernel sharpness, and batch
//! prediction with quality metrics.

pub mod config;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod metrics;

pub use config::{AlphaSpec, FileConfig, Method, RunConfig};
pub use dataset::{
    read_holdout_csv, read_training_csv, simulate_dataset, write_holdout_csv, write_training_csv,
    Dataset, HoldoutPoint, HoldoutScheme,
};
pub use error::{AppError, AppResult};
pub use harness::{build_model, estimate_alpha, predict_batch, AlphaFit, BatchOutput, CurvePoint};
pub use metrics::{compute_auc, compute_mse, MetricsReport};
