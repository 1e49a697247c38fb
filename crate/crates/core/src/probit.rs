//! Probit models with Gaussian-process priors.
//!
//! For responses y_i ~ Bernoulli(Phi[f(x_i)]) with f ~ GP(m, K), the marginal
//! likelihood is a Gaussian orthant-style probability
//! p(y) = Phi_n(D xi; I + D Omega D^T), and the predictive probability for a
//! new location is a ratio of two such probabilities in dimensions n+1 and n.
//! The ratio estimator shares every Monte Carlo sample between numerator and
//! denominator: the numerator's per-sample product is the denominator's
//! product times one extra conditional CDF factor, which bounds the ratio
//! inside (0, 1) by construction.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::float::{c, Float};
use crate::kernel::{kernel_eval, KernelSpec, Locations};
use crate::linalg::{build_covariance, dense_cholesky, dot, DenseSpd, PackedLower};
use crate::mvn::{
    block_reorder, estimate_products, univariate_reorder, Factor, FactorRef, McConfig,
    MvnProblem, ProbEstimate, ReorderResult, SweepScratch, UniformSource, sample_product,
    CHUNK,
};
use crate::normal::norm_cdf;
use crate::tlr::TlrMatrix;

/// How the marginal likelihood is estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LikelihoodMethod<F: Float> {
    /// Univariate greedy reorder and a dense Cholesky factor.
    Dense,
    /// Block reorder and a tile-low-rank factor.
    Tlr { block_size: usize, tol: F },
}

/// Per-model cache: the reorder/factorization work that does not depend on
/// the prediction location is computed once and shared. Clones of a model
/// share the cache; all cached values are immutable once stored.
struct ModelCache<F: Float> {
    chol_omega: Mutex<Option<Arc<PackedLower<F>>>>,
    dense_ml: Mutex<Option<Arc<ReorderResult<F>>>>,
    /// Keyed by (block_size, tol bits, seed): the block reorder consumes the
    /// seed for its crude block estimates.
    tlr_ml: Mutex<HashMap<(usize, u64, u64), Arc<ReorderResult<F>>>>,
    latent: Mutex<Option<Arc<LatentParams<F>>>>,
}

impl<F: Float> ModelCache<F> {
    fn empty() -> Self {
        ModelCache {
            chol_omega: Mutex::new(None),
            dense_ml: Mutex::new(None),
            tlr_ml: Mutex::new(HashMap::new()),
            latent: Mutex::new(None),
        }
    }
}

/// A probit regression model with a Gaussian-process prior on the latent
/// function: y_i ~ Bernoulli(Phi[f(x_i)]), f ~ GP(m, K).
///
/// Holds the training locations, binary responses, prior mean vector xi, and
/// prior covariance Omega. The sign diagonal D = diag(2 y_i - 1) is implicit
/// in `y`.
#[derive(Clone)]
pub struct ProbitGpModel<F: Float> {
    locs: Locations<F>,
    y: Vec<u8>,
    kernel: KernelSpec<F>,
    xi: Vec<F>,
    omega: DenseSpd<F>,
    cache: Arc<ModelCache<F>>,
}

impl<F: Float> std::fmt::Debug for ProbitGpModel<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProbitGpModel")
            .field("n", &self.n())
            .field("kernel", &self.kernel)
            .finish_non_exhaustive()
    }
}

impl<F: Float> PartialEq for ProbitGpModel<F> {
    fn eq(&self, other: &Self) -> bool {
        self.locs == other.locs
            && self.y == other.y
            && self.kernel == other.kernel
            && self.xi == other.xi
            && self.omega == other.omega
    }
}

impl<F: Float> ProbitGpModel<F> {
    /// Builds a model with Omega = K(locs, locs) and a zero prior mean.
    pub fn new(locs: Locations<F>, y: Vec<u8>, kernel: KernelSpec<F>) -> Result<Self> {
        let omega = build_covariance(&kernel, &locs)?;
        Self::from_parts(locs, y, kernel, vec![F::zero(); omega.n()], omega)
    }

    /// Replaces the prior mean vector (length n).
    pub fn with_mean(mut self, xi: Vec<F>) -> Result<Self> {
        if xi.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: xi.len() });
        }
        if xi.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "prior mean" });
        }
        self.xi = xi;
        self.cache = Arc::new(ModelCache::empty());
        Ok(self)
    }

    /// Builds a model from an explicit prior covariance instead of one
    /// evaluated from the kernel; used by tests exercising covariances a
    /// stationary kernel cannot produce.
    pub fn from_parts(
        locs: Locations<F>,
        y: Vec<u8>,
        kernel: KernelSpec<F>,
        xi: Vec<F>,
        omega: DenseSpd<F>,
    ) -> Result<Self> {
        let n = locs.len();
        if y.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: y.len() });
        }
        if xi.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: xi.len() });
        }
        if omega.n() != n {
            return Err(Error::DimensionMismatch { expected: n, got: omega.n() });
        }
        if y.iter().any(|&v| v > 1) {
            return Err(Error::InvalidParameter {
                name: "y",
                reason: "responses must be 0 or 1",
            });
        }
        if xi.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "prior mean" });
        }
        Ok(ProbitGpModel {
            locs,
            y,
            kernel,
            xi,
            omega,
            cache: Arc::new(ModelCache::empty()),
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn locs(&self) -> &Locations<F> {
        &self.locs
    }

    pub fn y(&self) -> &[u8] {
        &self.y
    }

    pub fn kernel(&self) -> &KernelSpec<F> {
        &self.kernel
    }

    pub fn xi(&self) -> &[F] {
        &self.xi
    }

    pub fn omega(&self) -> &DenseSpd<F> {
        &self.omega
    }

    /// Diagonal of D: 2 y_i - 1.
    pub fn signs(&self) -> Vec<F> {
        self.y
            .iter()
            .map(|&v| if v == 1 { F::one() } else { -F::one() })
            .collect()
    }

    /// The marginal-likelihood integration problem:
    /// Phi_n(-inf, D xi; I + D Omega D^T).
    pub fn ml_problem(&self) -> Result<MvnProblem<F>> {
        let n = self.n();
        let d = self.signs();
        let mut entries = vec![F::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                let v = d[i] * d[j] * self.omega.get(i, j);
                entries[i * n + j] = if i == j { v + F::one() } else { v };
            }
        }
        let sigma = DenseSpd::from_entries(n, entries)?;
        let b: Vec<F> = (0..n).map(|i| d[i] * self.xi[i]).collect();
        MvnProblem::new(vec![F::neg_infinity(); n], b, sigma)
    }

    /// Cached Cholesky factor of Omega.
    pub(crate) fn chol_omega(&self) -> Result<Arc<PackedLower<F>>> {
        let mut slot = self.cache.chol_omega.lock().expect("cache poisoned");
        if let Some(l) = slot.as_ref() {
            return Ok(Arc::clone(l));
        }
        let l = Arc::new(dense_cholesky(&self.omega)?);
        *slot = Some(Arc::clone(&l));
        Ok(l)
    }

    /// Cached univariate reorder of the marginal-likelihood problem.
    fn dense_ml_reorder(&self) -> Result<Arc<ReorderResult<F>>> {
        let mut slot = self.cache.dense_ml.lock().expect("cache poisoned");
        if let Some(r) = slot.as_ref() {
            return Ok(Arc::clone(r));
        }
        let p = self.ml_problem()?;
        let r = Arc::new(univariate_reorder(&p)?);
        *slot = Some(Arc::clone(&r));
        Ok(r)
    }

    /// Cached block reorder + tile factorization of the marginal-likelihood
    /// problem. Separate entries per (block_size, tol, seed) because the
    /// crude block estimates consume the seed.
    fn tlr_ml_reorder(
        &self,
        block_size: usize,
        tol: F,
        seed: u64,
    ) -> Result<Arc<ReorderResult<F>>> {
        let key = (
            block_size,
            tol.to_f64().unwrap_or(f64::NAN).to_bits(),
            seed,
        );
        let mut map = self.cache.tlr_ml.lock().expect("cache poisoned");
        if let Some(r) = map.get(&key) {
            return Ok(Arc::clone(r));
        }
        let p = self.ml_problem()?;
        let cfg = McConfig { r: 2, seed, antithetic: false };
        let r = Arc::new(block_reorder(&p, block_size, tol, &cfg)?);
        map.insert(key, Arc::clone(&r));
        Ok(r)
    }

    /// Cached latent-factorization parameters.
    pub(crate) fn latent(&self) -> Result<Arc<LatentParams<F>>> {
        let mut slot = self.cache.latent.lock().expect("cache poisoned");
        if let Some(l) = slot.as_ref() {
            return Ok(Arc::clone(l));
        }
        let l = Arc::new(compute_latent_params(self)?);
        *slot = Some(Arc::clone(&l));
        Ok(l)
    }
}

/// The (n+1)-dimensional problem data for a prediction location: the sign
/// diagonal gains a trailing +1, the mean gains m(x_new), and the covariance
/// gains the cross-covariance row K(x_new, x_i) with K(x_new, x_new) in the
/// corner.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedProblem<F: Float> {
    pub d_star: Vec<F>,
    pub xi_star: Vec<F>,
    pub omega_star: DenseSpd<F>,
}

/// Conditional law of the latent value at a new location given the training
/// latents: f(x_new) | f(X) ~ N(mu + H f(X), sigma2) in the zero-mean
/// parameterization mu = m(x_new) - H xi.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalGp<F: Float> {
    pub mu: F,
    pub h: Vec<F>,
    pub sigma2: F,
}

/// Parameters of the latent-variable factorization of the posterior: the
/// smooth Gaussian factor p(X | z) = N(mu_X + Sigma_X z, Sigma_X) and the
/// truncated-normal factor's covariance Sigma_z = I + Omega.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentParams<F: Float> {
    pub sigma_x: DenseSpd<F>,
    pub mu_x: Vec<F>,
    pub sigma_z: DenseSpd<F>,
}

/// Unified skew-normal posterior parameters (xi, Omega, Delta, gamma, Gamma).
#[derive(Debug, Clone, PartialEq)]
pub struct SunParams<F: Float> {
    pub xi: Vec<F>,
    pub omega: DenseSpd<F>,
    /// Row-major n x n matrix Omega-bar omega D^T s^{-1}.
    pub delta: Vec<F>,
    /// s^{-1} D xi.
    pub gamma: Vec<F>,
    /// s^{-1} (D Omega D^T + I) s^{-1}; unit diagonal by construction.
    pub gamma_mat: DenseSpd<F>,
}

/// Estimates the marginal likelihood p(y) = Phi_n(D xi; I + D Omega D^T).
pub fn marginal_likelihood<F: Float>(
    model: &ProbitGpModel<F>,
    cfg: &McConfig,
    method: &LikelihoodMethod<F>,
) -> Result<ProbEstimate<F>> {
    match method {
        LikelihoodMethod::Dense => {
            let rr = model.dense_ml_reorder()?;
            let factor = match &rr.factor {
                Factor::Dense(l) => l,
                Factor::Tlr(_) => unreachable!("dense reorder carries a dense factor"),
            };
            estimate_products(FactorRef::Dense(factor), &rr.a_perm, &rr.b_perm, cfg)
        }
        LikelihoodMethod::Tlr { block_size, tol } => {
            let rr = model.tlr_ml_reorder(*block_size, *tol, cfg.seed)?;
            let factor = match &rr.factor {
                Factor::Tlr(t) => t,
                Factor::Dense(_) => unreachable!("block reorder carries a tile factor"),
            };
            estimate_products(FactorRef::Tlr(factor), &rr.a_perm, &rr.b_perm, cfg)
        }
    }
}

fn check_x_new<F: Float>(model: &ProbitGpModel<F>, x_new: &[F]) -> Result<()> {
    if x_new.len() != model.locs.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.locs.dim(),
            got: x_new.len(),
        });
    }
    if x_new.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { context: "prediction location" });
    }
    if model.locs.contains(x_new) {
        return Err(Error::InvalidParameter {
            name: "x_new",
            reason: "coincides with a training location",
        });
    }
    Ok(())
}

/// Cross-covariance vector K(x_new, x_i) over the training locations.
fn cross_cov<F: Float>(model: &ProbitGpModel<F>, x_new: &[F]) -> Result<Vec<F>> {
    (0..model.n())
        .map(|i| kernel_eval(&model.kernel, x_new, model.locs.point(i)))
        .collect()
}

/// Extends the model's sign diagonal, mean, and covariance by one prediction
/// location, with prior mean `m_new` at that location.
pub fn extend_problem_with_mean<F: Float>(
    model: &ProbitGpModel<F>,
    x_new: &[F],
    m_new: F,
) -> Result<ExtendedProblem<F>> {
    check_x_new(model, x_new)?;
    if !m_new.is_finite() {
        return Err(Error::NonFinite { context: "prediction mean" });
    }
    let n = model.n();
    let k = cross_cov(model, x_new)?;
    let k_new = kernel_eval(&model.kernel, x_new, x_new)?;
    let m = n + 1;
    let mut entries = vec![F::zero(); m * m];
    for i in 0..n {
        for j in 0..n {
            entries[i * m + j] = model.omega.get(i, j);
        }
        entries[n * m + i] = k[i];
        entries[i * m + n] = k[i];
    }
    entries[n * m + n] = k_new;
    let omega_star = DenseSpd::from_entries(m, entries)?;
    let mut d_star = model.signs();
    d_star.push(F::one());
    let mut xi_star = model.xi.clone();
    xi_star.push(m_new);
    Ok(ExtendedProblem { d_star, xi_star, omega_star })
}

/// [`extend_problem_with_mean`] with the default zero mean at the new
/// location.
pub fn extend_problem<F: Float>(
    model: &ProbitGpModel<F>,
    x_new: &[F],
) -> Result<ExtendedProblem<F>> {
    extend_problem_with_mean(model, x_new, F::zero())
}

/// Conditional-law parameters of the latent value at `x_new` given the
/// training latents, with prior mean `m_new` at the new location:
/// H = k^T Omega^{-1}, mu = m_new - H xi, sigma2 = K(x_new,x_new) - k^T
/// Omega^{-1} k clamped at zero.
pub fn conditional_gp_params_with_mean<F: Float>(
    model: &ProbitGpModel<F>,
    x_new: &[F],
    m_new: F,
) -> Result<ConditionalGp<F>> {
    check_x_new(model, x_new)?;
    if !m_new.is_finite() {
        return Err(Error::NonFinite { context: "prediction mean" });
    }
    let k = cross_cov(model, x_new)?;
    let k_new = kernel_eval(&model.kernel, x_new, x_new)?;
    let chol = model.chol_omega()?;
    let mut h = k.clone();
    chol.solve_spd(&mut h);
    let mu = m_new - dot(&h, &model.xi);
    let sigma2 = (k_new - dot(&k, &h)).max(F::zero());
    if !mu.is_finite() || !sigma2.is_finite() {
        return Err(Error::NonFinite { context: "conditional parameters" });
    }
    Ok(ConditionalGp { mu, h, sigma2 })
}

/// [`conditional_gp_params_with_mean`] with the default zero mean.
pub fn conditional_gp_params<F: Float>(
    model: &ProbitGpModel<F>,
    x_new: &[F],
) -> Result<ConditionalGp<F>> {
    conditional_gp_params_with_mean(model, x_new, F::zero())
}

/// Latent factorization parameters, computed from a single factorization of
/// Sigma_z = I + Omega: with W = Sigma_z^{-1},
/// Sigma_X = (Omega^{-1} + I)^{-1} = I - W and mu_X = Sigma_X Omega^{-1} xi
/// = W xi. Omega itself is never inverted.
fn compute_latent_params<F: Float>(model: &ProbitGpModel<F>) -> Result<LatentParams<F>> {
    let n = model.n();
    let mut z_entries = model.omega.as_slice().to_vec();
    for i in 0..n {
        z_entries[i * n + i] += F::one();
    }
    let sigma_z = DenseSpd::from_entries(n, z_entries)?;
    let chol = dense_cholesky(&sigma_z)?;
    // W = Sigma_z^{-1}, column by column; mirrored to exact symmetry.
    let mut w = vec![F::zero(); n * n];
    let mut col = vec![F::zero(); n];
    for j in 0..n {
        col.iter_mut().for_each(|v| *v = F::zero());
        col[j] = F::one();
        chol.solve_spd(&mut col);
        for i in j..n {
            w[i * n + j] = col[i];
            w[j * n + i] = col[i];
        }
    }
    let mut x_entries = vec![F::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            let v = -w[i * n + j];
            x_entries[i * n + j] = if i == j { v + F::one() } else { v };
        }
    }
    let sigma_x = DenseSpd::from_entries(n, x_entries)?;
    let mut mu_x = vec![F::zero(); n];
    for i in 0..n {
        mu_x[i] = dot(&w[i * n..(i + 1) * n], &model.xi);
    }
    Ok(LatentParams { sigma_x, mu_x, sigma_z })
}

/// Latent factorization parameters (cached on the model).
pub fn latent_params<F: Float>(model: &ProbitGpModel<F>) -> Result<LatentParams<F>> {
    Ok((*model.latent()?).clone())
}

/// Unified skew-normal parameters of the exact posterior.
pub fn sun_params<F: Float>(model: &ProbitGpModel<F>) -> Result<SunParams<F>> {
    let n = model.n();
    let d = model.signs();
    let omega = &model.omega;
    // s_i = sqrt((D Omega D^T + I)_ii) = sqrt(omega_ii + 1); omega_i = sqrt(omega_ii).
    let s: Vec<F> = (0..n).map(|i| (omega.get(i, i) + F::one()).sqrt()).collect();
    let om_sqrt: Vec<F> = (0..n).map(|i| omega.get(i, i).sqrt()).collect();
    // delta = Omega-bar omega D^T s^{-1}: entry (i, j) = Omega-bar_ij omega_j d_j / s_j.
    let mut delta = vec![F::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            let om_bar = omega.get(i, j) / (om_sqrt[i] * om_sqrt[j]);
            delta[i * n + j] = om_bar * om_sqrt[j] * d[j] / s[j];
        }
    }
    let gamma: Vec<F> = (0..n).map(|i| d[i] * model.xi[i] / s[i]).collect();
    let mut g_entries = vec![F::zero(); n * n];
    for i in 0..n {
        // Unit diagonal exactly: (omega_ii + 1) / s_i^2 = 1 algebraically.
        g_entries[i * n + i] = F::one();
        for j in 0..i {
            let v = d[i] * d[j] * omega.get(i, j) / (s[i] * s[j]);
            g_entries[i * n + j] = v;
            g_entries[j * n + i] = v;
        }
    }
    let gamma_mat = DenseSpd::from_entries(n, g_entries)?;
    Ok(SunParams {
        xi: model.xi.clone(),
        omega: omega.clone(),
        delta,
        gamma,
        gamma_mat,
    })
}

/// Largest representable value strictly below one (ratio clamp bound).
#[inline(always)]
fn one_minus<F: Float>() -> F {
    F::one() - F::epsilon() * c::<F>(0.5)
}

/// Numerator, denominator, and second-moment sums of the shared-sample loop.
struct RatioSums<F: Float> {
    sn: F,
    sd: F,
    snn: F,
    sdd: F,
    snd: F,
}

/// The shared-sample ratio estimate with full accumulations exposed for the
/// in-crate tests of the shared-sample property.
pub(crate) fn predict_ratio_parts<F: Float>(
    model: &ProbitGpModel<F>,
    x_new: &[F],
    m_new: F,
    cfg: &McConfig,
    block_size: usize,
    tol: F,
) -> Result<(ProbEstimate<F>, F, F)> {
    cfg.validate()?;
    check_x_new(model, x_new)?;
    if !m_new.is_finite() {
        return Err(Error::NonFinite { context: "prediction mean" });
    }
    let rr = model.tlr_ml_reorder(block_size, tol, cfg.seed)?;
    let t: &TlrMatrix<F> = match &rr.factor {
        Factor::Tlr(t) => t,
        Factor::Dense(_) => unreachable!("block reorder carries a tile factor"),
    };
    let n = model.n();
    let d = model.signs();
    let k_new = kernel_eval(&model.kernel, x_new, x_new)?;

    // Extended-row data in the reordered basis: the new variable's
    // covariance row against the permuted training variables is
    // d_perm(j) * K(x_new, x_perm(j)); its variance is 1 + K(x_new, x_new).
    let mut row: Vec<F> = rr
        .permutation
        .iter()
        .map(|&orig| {
            kernel_eval(&model.kernel, x_new, model.locs.point(orig)).map(|kv| d[orig] * kv)
        })
        .collect::<Result<_>>()?;
    let var_new = F::one() + k_new;
    t.solve_forward(&mut row);
    let z = row;
    let l_new_sq = var_new - dot(&z, &z);
    if !(l_new_sq > F::zero()) || !l_new_sq.is_finite() {
        return Err(Error::NotPositiveDefinite { jitter_tried: 0.0 });
    }
    let l_new = l_new_sq.sqrt();
    // Upper limit of the new coordinate: (D* xi*)_{n+1} = m(x_new).
    let b_new = m_new;

    let src = UniformSource::new(cfg.seed, cfg.antithetic);
    let r_total = cfg.r;
    let num_chunks = r_total.div_ceil(CHUNK);
    let tiny = F::min_positive_value();
    let partials: Vec<RatioSums<F>> = (0..num_chunks)
        .into_par_iter()
        .map_init(
            || SweepScratch::new(n),
            |scratch, ci| {
                let mut acc = RatioSums {
                    sn: F::zero(),
                    sd: F::zero(),
                    snn: F::zero(),
                    sdd: F::zero(),
                    snd: F::zero(),
                };
                let lo = ci * CHUNK;
                let hi = (lo + CHUNK).min(r_total);
                for r in lo..hi {
                    let den =
                        sample_product(FactorRef::Tlr(t), &rr.a_perm, &rr.b_perm, &src, r, true, scratch);
                    let shift = dot(&z, &scratch.v);
                    // Extra conditional CDF factor for the new coordinate,
                    // kept strictly inside (0, 1) so numerator < denominator
                    // sample by sample.
                    let extra = norm_cdf((b_new - shift) / l_new)
                        .max(tiny)
                        .min(one_minus::<F>());
                    let num = den * extra;
                    acc.sn += num;
                    acc.sd += den;
                    acc.snn += num * num;
                    acc.sdd += den * den;
                    acc.snd += num * den;
                }
                acc
            },
        )
        .collect();
    let mut sn = F::zero();
    let mut sd = F::zero();
    let mut snn = F::zero();
    let mut sdd = F::zero();
    let mut snd = F::zero();
    for p in partials {
        sn += p.sn;
        sd += p.sd;
        snn += p.snn;
        sdd += p.sdd;
        snd += p.snd;
    }
    if !(sd > F::zero()) {
        return Err(Error::VanishingDenominator);
    }
    let rf = c::<F>(r_total as f64);
    let mean_n = sn / rf;
    let mean_d = sd / rf;
    let p_hat = mean_n / mean_d;
    // Delta-method standard error of the ratio: with g_r = num_r - p den_r
    // (mean zero by construction), Var(p) ~ Var(g) / (R mean_d^2).
    let var_g = ((snn - (p_hat + p_hat) * snd + p_hat * p_hat * sdd) / (rf - F::one()))
        .max(F::zero());
    let se = (var_g / rf).sqrt() / mean_d;
    let value = p_hat.max(tiny).min(one_minus::<F>());
    if !value.is_finite() || !se.is_finite() {
        return Err(Error::NonFinite { context: "ratio estimate" });
    }
    Ok((
        ProbEstimate { value, std_error: se, r_used: r_total },
        mean_n,
        mean_d,
    ))
}

/// Predictive probability p(y_new = 1 | y) by the shared-sample ratio
/// estimator, with prior mean `m_new` at the new location.
///
/// The denominator reorder/factorization is cached on the model; each call
/// adds one factor row for the new location and runs the sample loop. The
/// returned value is strictly inside (0, 1).
pub fn predict_ratio_with_mean<F: Float>(
    model: &ProbitGpModel<F>,
    x_new: &[F],
    m_new: F,
    cfg: &McConfig,
    block_size: usize,
    tol: F,
) -> Result<ProbEstimate<F>> {
    predict_ratio_parts(model, x_new, m_new, cfg, block_size, tol).map(|(est, _, _)| est)
}

/// [`predict_ratio_with_mean`] with the default zero mean at the new
/// location.
pub fn predict_ratio<F: Float>(
    model: &ProbitGpModel<F>,
    x_new: &[F],
    cfg: &McConfig,
    block_size: usize,
    tol: F,
) -> Result<ProbEstimate<F>> {
    predict_ratio_with_mean(model, x_new, F::zero(), cfg, block_size, tol)
}
