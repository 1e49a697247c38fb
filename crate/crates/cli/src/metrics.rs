//! Predictive-quality metrics and the per-run report.

use probit_gp::{Error, Result};
use serde::Serialize;

/// Rank-based AUC (Mann-Whitney), ties contributing one half.
///
/// Requires both classes to be present; the caller decides how to handle the
/// single-class case.
pub fn compute_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: scores.len(), got: labels.len() });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite { context: "auc scores" });
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::InvalidParameter { name: "labels", reason: "must be 0 or 1" });
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidParameter {
            name: "labels",
            reason: "needs both classes for a ranking metric",
        });
    }

    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    // Average ranks across tied scores, then the rank-sum statistic.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg_rank = (i + j + 2) as f64 / 2.0;
        for &k in &idx[i..=j] {
            if labels[k] == 1 {
                rank_sum += avg_rank;
            }
        }
        i = j + 1;
    }
    let np = n_pos as f64;
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// Mean squared difference between estimates and truth.
pub fn compute_mse(estimates: &[f64], truth: &[f64]) -> Result<f64> {
    if estimates.len() != truth.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), got: estimates.len() });
    }
    if estimates.is_empty() {
        return Err(Error::InvalidParameter { name: "estimates", reason: "must be non-empty" });
    }
    let sum: f64 = estimates.iter().zip(truth).map(|(e, t)| (e - t) * (e - t)).sum();
    Ok(sum / estimates.len() as f64)
}

/// Quality and provenance summary of one batch-prediction run.
///
/// Timing fields are excluded from serialization so that written artifacts
/// depend only on the configuration and seed; wall-clock numbers go to
/// stderr instead.
#[derive(Clone, Debug, Serialize)]
pub struct MetricsReport {
    pub method: String,
    pub n: usize,
    pub r: usize,
    pub seed: u64,
    /// Mean squared error against true probabilities, when truth is known.
    pub mse: Option<f64>,
    /// Ranking quality against true responses, when both classes occur.
    pub auc: Option<f64>,
    /// Set when responses are present but one-class, which leaves AUC undefined.
    pub auc_omitted_single_class: bool,
    #[serde(skip)]
    pub fit_seconds: f64,
    #[serde(skip)]
    pub per_prediction_seconds: f64,
}
