//! Predictive probabilities for probit models with Gaussian-process priors.
//!
//! Two estimators of p(y_new = 1 | y) are provided. The first expresses the
//! predictive probability as a ratio of two Gaussian cumulative distribution
//! functions of dimension n+1 and n, and evaluates both with the same
//! separation-of-variables Monte Carlo sweep over a tile-low-rank Cholesky
//! factor, reusing every sample between numerator and denominator. The second
//! fits a mean-field approximation of the truncated-normal posterior by
//! coordinate ascent and averages a closed-form plug-in over independent
//! samples of the factorized approximation.
//!
//! All numerical code is generic over the scalar type through [`Float`];
//! concrete aliases at the crate root fix `f64` for everyday use.

pub mod error;
pub mod float;
pub mod kernel;
pub mod linalg;
pub mod mvn;
pub mod normal;
pub mod probit;
pub mod rng;
pub mod tlr;
pub mod vb;

pub use error::{Error, Result};
pub use float::Float;

pub use kernel::{kernel_eval, KernelFamily, KernelSpec, Locations};
pub use linalg::{build_covariance, dense_cholesky, DenseSpd, PackedLower};
pub use mvn::{
    block_reorder, sov_estimate, tlr_sov_estimate, univariate_reorder, Factor, McConfig,
    MvnProblem, ProbEstimate, ReorderResult,
};
pub use probit::{
    conditional_gp_params, extend_problem, latent_params, marginal_likelihood, predict_ratio,
    sun_params, ConditionalGp, ExtendedProblem, LatentParams, LikelihoodMethod, ProbitGpModel,
    SunParams,
};
pub use tlr::{tlr_compress, tlr_row_matvec, TlrMatrix};
pub use vb::{
    cavi_fit, exact_tn_predict, predict_vb, tn_mean, tn_sample, TnFactor, TnFactorSet, TnSide,
};

/// Kernel specification over `f64`.
pub type KernelSpec64 = KernelSpec<f64>;
/// Dense symmetric positive-definite matrix over `f64`.
pub type DenseSpd64 = DenseSpd<f64>;
/// Tile-low-rank Cholesky factor over `f64`.
pub type TlrMatrix64 = TlrMatrix<f64>;
/// Integration problem over `f64`.
pub type MvnProblem64 = MvnProblem<f64>;
/// Probability estimate over `f64`.
pub type ProbEstimate64 = ProbEstimate<f64>;
/// Probit Gaussian-process model over `f64`.
pub type ProbitGpModel64 = ProbitGpModel<f64>;
