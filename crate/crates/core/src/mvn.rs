//! Monte Carlo estimation of multivariate normal probabilities.
//!
//! The estimand Phi_n(a, b; Sigma) is transformed to the unit hypercube by
//! separation of variables: given a Cholesky factor L, each coordinate
//! contributes a factor e_i - d_i where d_i and e_i are conditional normal
//! CDF values at the running limits, and the sampled conditioning point is
//! v_i = Phi^{-1}(d_i + w_i (e_i - d_i)). The dense path preconditions with a
//! greedy univariate reordering; the scalable path orders whole blocks by
//! crude probability estimates and factorizes the permuted matrix in
//! tile-low-rank form.

use crate::error::{Error, Result};
use crate::float::{c, Float};
use crate::linalg::{dot, with_jitter, DenseSpd, PackedLower};
use crate::normal::{inv_mills, norm_cdf, norm_cdf_diff, norm_pdf, norm_quantile};
use crate::rng::{sub_seed, Counter};
use crate::tlr::{tlr_compress, TlrMatrix};
use rayon::prelude::*;

/// Stream tag for the crude block estimates inside [`block_reorder`].
const CRUDE_TAG: u64 = 0x63727564;

/// Samples per block for the crude estimates that order blocks.
const R_CRUDE: usize = 64;

/// Samples per deterministic reduction chunk.
pub(crate) const CHUNK: usize = 2048;

/// An integration problem: P(a <= X <= b) for X ~ N(0, Sigma).
/// Entries of `a` may be -inf and entries of `b` may be +inf.
#[derive(Debug, Clone, PartialEq)]
pub struct MvnProblem<F: Float> {
    pub a: Vec<F>,
    pub b: Vec<F>,
    pub sigma: DenseSpd<F>,
}

impl<F: Float> MvnProblem<F> {
    pub fn new(a: Vec<F>, b: Vec<F>, sigma: DenseSpd<F>) -> Result<Self> {
        let n = sigma.n();
        if a.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: a.len() });
        }
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: b.len() });
        }
        for i in 0..n {
            if a[i].is_nan() || b[i].is_nan() {
                return Err(Error::NonFinite { context: "integration limits" });
            }
            if !(a[i] < b[i]) {
                return Err(Error::LimitsInverted { index: i });
            }
        }
        Ok(MvnProblem { a, b, sigma })
    }

    pub fn n(&self) -> usize {
        self.sigma.n()
    }
}

/// Monte Carlo configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    /// Sample count; at least 2, and even when `antithetic` is set.
    pub r: usize,
    pub seed: u64,
    /// Pair every sample w with its reflection 1 - w.
    pub antithetic: bool,
}

impl McConfig {
    pub fn new(r: usize, seed: u64) -> Self {
        McConfig { r, seed, antithetic: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r < 2 {
            return Err(Error::BadSampleCount { r: self.r, reason: "need at least 2 samples" });
        }
        if self.antithetic && self.r % 2 != 0 {
            return Err(Error::BadSampleCount {
                r: self.r,
                reason: "antithetic pairing needs an even sample count",
            });
        }
        Ok(())
    }
}

/// A Monte Carlo probability estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbEstimate<F: Float> {
    /// Mean of the per-sample products, clamped into [0, 1].
    pub value: F,
    /// Sample standard deviation of the products divided by sqrt(R).
    pub std_error: F,
    pub r_used: usize,
}

/// The factor carried by a reorder result.
#[derive(Debug, Clone, PartialEq)]
pub enum Factor<F: Float> {
    Dense(PackedLower<F>),
    Tlr(TlrMatrix<F>),
}

/// A permutation of an integration problem together with the Cholesky factor
/// of the permuted covariance and the permuted limits.
///
/// `permutation[k]` is the original index now at position k, so
/// `a_perm[k] = a[permutation[k]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReorderResult<F: Float> {
    pub permutation: Vec<usize>,
    pub factor: Factor<F>,
    pub a_perm: Vec<F>,
    pub b_perm: Vec<F>,
}

/// Uniform variates for the sample loop: a pure function of (sample index,
/// coordinate index), with optional antithetic reflection of odd samples.
#[derive(Clone, Copy)]
pub(crate) struct UniformSource {
    ctr: Counter,
    antithetic: bool,
}

impl UniformSource {
    pub(crate) fn new(seed: u64, antithetic: bool) -> Self {
        UniformSource { ctr: Counter::new(seed), antithetic }
    }

    #[inline(always)]
    pub(crate) fn get(&self, r: usize, j: usize) -> f64 {
        if self.antithetic {
            let u = self.ctr.uniform((r >> 1) as u64, j as u64);
            if r & 1 == 1 {
                1.0 - u
            } else {
                u
            }
        } else {
            self.ctr.uniform(r as u64, j as u64)
        }
    }
}

/// Largest representable value strictly below one.
#[inline(always)]
fn one_minus<F: Float>() -> F {
    F::one() - F::epsilon() * c::<F>(0.5)
}

/// Quantile argument clamp: keeps Phi^{-1} finite at the extremes.
#[inline(always)]
fn clamp_unit<F: Float>(t: F) -> F {
    let lo = c::<F>(1e-16).max(F::min_positive_value());
    t.max(lo).min(one_minus::<F>())
}

/// One coordinate of the sweep: conditional CDF values at the standardized
/// limits. Returns (d_i, e_i - d_i), both in [0, 1]. Infinite limits skip
/// their CDF evaluation: d_i = 0 at a_i = -inf, e_i = 1 at b_i = +inf.
#[inline(always)]
fn coord_cdfs<F: Float>(a_i: F, b_i: F, shift: F, l_ii: F) -> (F, F) {
    match (a_i.is_finite(), b_i.is_finite()) {
        (false, false) => (F::zero(), F::one()),
        (false, true) => {
            let bt = (b_i - shift) / l_ii;
            (F::zero(), norm_cdf(bt))
        }
        (true, false) => {
            let at = (a_i - shift) / l_ii;
            let diff = norm_cdf(-at);
            (F::one() - diff, diff)
        }
        (true, true) => {
            let at = (a_i - shift) / l_ii;
            let bt = (b_i - shift) / l_ii;
            let d = norm_cdf(at);
            (d, norm_cdf_diff(at, bt).max(F::zero()))
        }
    }
}

/// References either factor representation for the sweep.
#[derive(Clone, Copy)]
pub(crate) enum FactorRef<'a, F: Float> {
    Dense(&'a PackedLower<F>),
    Tlr(&'a TlrMatrix<F>),
}

/// Per-thread workspace for the sample loop.
pub(crate) struct SweepScratch<F: Float> {
    /// Conditioning points v_j = Phi^{-1}(d_j + w_j (e_j - d_j)).
    pub(crate) v: Vec<F>,
    /// Per-tile projections V^T v reused within a block row.
    w: Vec<Vec<F>>,
}

impl<F: Float> SweepScratch<F> {
    pub(crate) fn new(n: usize) -> Self {
        SweepScratch { v: vec![F::zero(); n], w: Vec::new() }
    }
}

/// Runs one sample of the sweep, filling `scratch.v` and returning the
/// product of the coordinate differences.
///
/// `store_last_v` controls whether the final coordinate's quantile is
/// evaluated; only callers extending the problem by another row need it.
pub(crate) fn sample_product<F: Float>(
    factor: FactorRef<'_, F>,
    a: &[F],
    b: &[F],
    src: &UniformSource,
    r: usize,
    store_last_v: bool,
    scratch: &mut SweepScratch<F>,
) -> F {
    let n = a.len();
    let mut prod = F::one();
    match factor {
        FactorRef::Dense(l) => {
            for i in 0..n {
                let row = l.row(i);
                let shift = dot(&row[..i], &scratch.v[..i]);
                let (d, diff) = coord_cdfs(a[i], b[i], shift, row[i]);
                prod *= diff;
                if i + 1 < n || store_last_v {
                    let u = c::<F>(src.get(r, i));
                    scratch.v[i] = norm_quantile(clamp_unit(d + u * diff));
                }
            }
        }
        FactorRef::Tlr(t) => {
            let nb = t.num_blocks();
            scratch.w.resize_with(nb, Vec::new);
            for bi in 0..nb {
                let range = t.block_range(bi);
                let lo = range.start;
                // Project the finished prefix of v through each tile once.
                for bj in 0..bi {
                    let tile = t.offdiag_tile(bi, bj);
                    let jlo = t.block_range(bj).start;
                    tile.vt_mul(&scratch.v[jlo..jlo + tile.cols], &mut scratch.w[bj]);
                }
                let ld = t.diag_tile(bi);
                for loc in 0..range.len() {
                    let i = lo + loc;
                    let mut shift = F::zero();
                    for bj in 0..bi {
                        let tile = t.offdiag_tile(bi, bj);
                        shift += dot(tile.u_row(loc), &scratch.w[bj]);
                    }
                    let row = ld.row(loc);
                    shift += dot(&row[..loc], &scratch.v[lo..i]);
                    let (d, diff) = coord_cdfs(a[i], b[i], shift, row[loc]);
                    prod *= diff;
                    if i + 1 < n || store_last_v {
                        let u = c::<F>(src.get(r, i));
                        scratch.v[i] = norm_quantile(clamp_unit(d + u * diff));
                    }
                }
            }
        }
    }
    prod
}

/// Mean and standard error of per-sample products, accumulated in fixed
/// chunks combined in index order so the result is independent of both
/// worker count and scheduling.
pub(crate) fn estimate_products<F: Float>(
    factor: FactorRef<'_, F>,
    a: &[F],
    b: &[F],
    cfg: &McConfig,
) -> Result<ProbEstimate<F>> {
    cfg.validate()?;
    let n = a.len();
    let src = UniformSource::new(cfg.seed, cfg.antithetic);
    let r_total = cfg.r;
    let num_chunks = r_total.div_ceil(CHUNK);
    let partials: Vec<(F, F)> = (0..num_chunks)
        .into_par_iter()
        .map_init(
            || SweepScratch::new(n),
            |scratch, ci| {
                let mut sum = F::zero();
                let mut sum_sq = F::zero();
                let lo = ci * CHUNK;
                let hi = (lo + CHUNK).min(r_total);
                for r in lo..hi {
                    let p = sample_product(factor, a, b, &src, r, false, scratch);
                    sum += p;
                    sum_sq += p * p;
                }
                (sum, sum_sq)
            },
        )
        .collect();
    let mut sum = F::zero();
    let mut sum_sq = F::zero();
    for (s, ss) in partials {
        sum += s;
        sum_sq += ss;
    }
    let rf = c::<F>(r_total as f64);
    let mean = sum / rf;
    let var = ((sum_sq - rf * mean * mean) / (rf - F::one())).max(F::zero());
    let se = (var / rf).sqrt();
    if !mean.is_finite() || !se.is_finite() {
        return Err(Error::NonFinite { context: "probability estimate" });
    }
    Ok(ProbEstimate {
        value: mean.max(F::zero()).min(F::one()),
        std_error: se,
        r_used: r_total,
    })
}

/// Separation-of-variables estimate of Phi_n(a, b; Sigma) for a problem and
/// a dense Cholesky factor of its covariance.
pub fn sov_estimate<F: Float>(
    p: &MvnProblem<F>,
    factor: &PackedLower<F>,
    cfg: &McConfig,
) -> Result<ProbEstimate<F>> {
    if factor.n() != p.n() {
        return Err(Error::DimensionMismatch { expected: p.n(), got: factor.n() });
    }
    estimate_products(FactorRef::Dense(factor), &p.a, &p.b, cfg)
}

/// Same estimand as [`sov_estimate`], with the row inner products of the
/// sweep evaluated through tile factors.
pub fn tlr_sov_estimate<F: Float>(
    p: &MvnProblem<F>,
    r: &ReorderResult<F>,
    cfg: &McConfig,
) -> Result<ProbEstimate<F>> {
    let t = match &r.factor {
        Factor::Tlr(t) => t,
        Factor::Dense(_) => {
            return Err(Error::InvalidParameter {
                name: "r",
                reason: "reorder result does not carry a tile-low-rank factor",
            })
        }
    };
    check_reorder(p, r)?;
    if t.n() != p.n() {
        return Err(Error::DimensionMismatch { expected: p.n(), got: t.n() });
    }
    estimate_products(FactorRef::Tlr(t), &r.a_perm, &r.b_perm, cfg)
}

fn check_reorder<F: Float>(p: &MvnProblem<F>, r: &ReorderResult<F>) -> Result<()> {
    let n = p.n();
    if r.permutation.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: r.permutation.len() });
    }
    let mut seen = vec![false; n];
    for (k, &orig) in r.permutation.iter().enumerate() {
        if orig >= n || seen[orig] {
            return Err(Error::InvalidParameter {
                name: "permutation",
                reason: "not a bijection on the problem indices",
            });
        }
        seen[orig] = true;
        if r.a_perm[k] != p.a[orig] || r.b_perm[k] != p.b[orig] {
            return Err(Error::InvalidParameter {
                name: "reorder",
                reason: "permuted limits do not match the problem",
            });
        }
    }
    Ok(())
}

/// Truncated-normal expectation plug-in used by the greedy reordering: the
/// expected value of a standard normal conditioned to (at, bt).
fn plugin_mean<F: Float>(at: F, bt: F) -> F {
    match (at.is_finite(), bt.is_finite()) {
        (false, false) => F::zero(),
        (false, true) => -inv_mills(bt),
        (true, false) => inv_mills(-at),
        (true, true) => {
            let mass = norm_cdf_diff(at, bt);
            if mass <= F::min_positive_value() {
                return (at + bt) * c::<F>(0.5);
            }
            (norm_pdf(at) - norm_pdf(bt)) / mass
        }
    }
}

/// One attempt of the greedy reordering at a fixed jitter. Returns the
/// permutation, the packed factor, and the permuted limits.
#[allow(clippy::type_complexity)]
fn univariate_attempt<F: Float>(
    p: &MvnProblem<F>,
    jitter: F,
) -> Option<(Vec<usize>, PackedLower<F>, Vec<F>, Vec<F>)> {
    let n = p.n();
    let mut sig: Vec<F> = p.sigma.as_slice().to_vec();
    let mut a = p.a.clone();
    let mut b = p.b.clone();
    let mut orig: Vec<usize> = (0..n).collect();
    // Full-storage lower factor; rows are swapped during pivoting.
    let mut l = vec![F::zero(); n * n];
    // Running conditional variance and mean shift per variable.
    let mut cond_var: Vec<F> = (0..n).map(|i| sig[i * n + i] + jitter).collect();
    let mut shift = vec![F::zero(); n];
    let mut plug = vec![F::zero(); n];

    for i in 0..n {
        // Select the remaining variable with the least conditional mass;
        // break ties toward the smallest original index.
        let mut best = i;
        let mut best_mass = F::infinity();
        for k in i..n {
            if !(cond_var[k] > F::zero()) {
                return None;
            }
            let sd = cond_var[k].sqrt();
            let at = if a[k].is_finite() { (a[k] - shift[k]) / sd } else { F::neg_infinity() };
            let bt = if b[k].is_finite() { (b[k] - shift[k]) / sd } else { F::infinity() };
            let mass = coord_cdfs_mass(at, bt);
            if mass < best_mass || (mass == best_mass && orig[k] < orig[best]) {
                best = k;
                best_mass = mass;
            }
        }
        if best != i {
            swap_symmetric(&mut sig, n, i, best);
            a.swap(i, best);
            b.swap(i, best);
            orig.swap(i, best);
            cond_var.swap(i, best);
            shift.swap(i, best);
            for col in 0..i {
                l.swap(i * n + col, best * n + col);
            }
        }
        let lii = cond_var[i].sqrt();
        if !(lii > F::zero()) || !lii.is_finite() {
            return None;
        }
        l[i * n + i] = lii;
        let at = if a[i].is_finite() { (a[i] - shift[i]) / lii } else { F::neg_infinity() };
        let bt = if b[i].is_finite() { (b[i] - shift[i]) / lii } else { F::infinity() };
        plug[i] = plugin_mean(at, bt);

        for k in i + 1..n {
            let (rk, ri) = (&l[k * n..k * n + i], &l[i * n..i * n + i]);
            let lki = (sig[k * n + i] - dot(rk, ri)) / lii;
            l[k * n + i] = lki;
            cond_var[k] -= lki * lki;
            shift[k] += lki * plug[i];
        }
    }

    let mut packed = PackedLower::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            packed.set(i, j, l[i * n + j]);
        }
    }
    Some((orig, packed, a, b))
}

/// Conditional mass for variable selection; mirrors [`coord_cdfs`] on
/// standardized limits.
#[inline]
fn coord_cdfs_mass<F: Float>(at: F, bt: F) -> F {
    match (at.is_finite(), bt.is_finite()) {
        (false, false) => F::one(),
        (false, true) => norm_cdf(bt),
        (true, false) => norm_cdf(-at),
        (true, true) => norm_cdf_diff(at, bt).max(F::zero()),
    }
}

fn swap_symmetric<F: Float>(sig: &mut [F], n: usize, i: usize, j: usize) {
    for k in 0..n {
        sig.swap(i * n + k, j * n + k);
    }
    for k in 0..n {
        sig.swap(k * n + i, k * n + j);
    }
}

/// Greedy univariate reordering: repeatedly moves the remaining variable
/// with the narrowest conditional integration limits (by the expected-value
/// plug-in) to the front while extending the Cholesky factor. O(n^3) total.
pub fn univariate_reorder<F: Float>(p: &MvnProblem<F>) -> Result<ReorderResult<F>> {
    let (orig, factor, a_perm, b_perm) =
        with_jitter(&p.sigma, |jitter| univariate_attempt(p, jitter))?;
    Ok(ReorderResult {
        permutation: orig,
        factor: Factor::Dense(factor),
        a_perm,
        b_perm,
    })
}

/// Block reordering for the tile-low-rank path: consecutive blocks of
/// `block_size` variables are ordered ascending by a crude Monte Carlo
/// estimate of their marginal probability (univariate-reordered SOV with
/// a small fixed sample count and a deterministic per-block sub-seed),
/// variables are reordered within each block, and the permuted covariance is
/// factorized in tile-low-rank form.
pub fn block_reorder<F: Float>(
    p: &MvnProblem<F>,
    block_size: usize,
    tol: F,
    cfg: &McConfig,
) -> Result<ReorderResult<F>> {
    let n = p.n();
    if block_size == 0 || block_size > n {
        return Err(Error::InvalidParameter {
            name: "block_size",
            reason: "must be in 1..=n",
        });
    }
    let crude_seed = sub_seed(cfg.seed, CRUDE_TAG);
    let mut blocks: Vec<(F, usize, Vec<usize>)> = Vec::new();
    let mut at = 0usize;
    let mut bi = 0usize;
    while at < n {
        let hi = (at + block_size).min(n);
        let idx: Vec<usize> = (at..hi).collect();
        let sub = MvnProblem {
            a: idx.iter().map(|&i| p.a[i]).collect(),
            b: idx.iter().map(|&i| p.b[i]).collect(),
            sigma: p.sigma.submatrix(&idx)?,
        };
        let rr = univariate_reorder(&sub)?;
        let crude_cfg = McConfig {
            r: R_CRUDE,
            seed: sub_seed(crude_seed, bi as u64),
            antithetic: false,
        };
        let factor = match &rr.factor {
            Factor::Dense(l) => l,
            Factor::Tlr(_) => unreachable!("univariate reorder is dense"),
        };
        let crude =
            estimate_products(FactorRef::Dense(factor), &rr.a_perm, &rr.b_perm, &crude_cfg)?;
        // Block order within the global permutation: original indices in the
        // block's internal greedy order.
        let ordered: Vec<usize> = rr.permutation.iter().map(|&k| idx[k]).collect();
        blocks.push((crude.value, bi, ordered));
        at = hi;
        bi += 1;
    }
    blocks.sort_by(|x, y| {
        x.0.partial_cmp(&y.0)
            .expect("crude estimates are finite")
            .then(x.1.cmp(&y.1))
    });
    let mut permutation = Vec::with_capacity(n);
    for (_, _, ordered) in &blocks {
        permutation.extend_from_slice(ordered);
    }
    let sigma_perm = p.sigma.permuted(&permutation)?;
    let factor = tlr_compress(&sigma_perm, block_size, tol)?;
    let a_perm: Vec<F> = permutation.iter().map(|&i| p.a[i]).collect();
    let b_perm: Vec<F> = permutation.iter().map(|&i| p.b[i]).collect();
    Ok(ReorderResult {
        permutation,
        factor: Factor::Tlr(factor),
        a_perm,
        b_perm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense_cholesky;

    fn corr2(rho: f64) -> DenseSpd<f64> {
        DenseSpd::from_entries(2, vec![1.0, rho, rho, 1.0]).unwrap()
    }

    /// 50-digit orthant values 1/4 + asin(rho)/(2 pi).
    const ORTHANTS: [(f64, f64); 5] = [
        (-0.9, 0.07178314656435313537547),
        (-0.5, 0.1666666666666666666667),
        (0.0, 0.25),
        (0.5, 0.3333333333333333333333),
        (0.9, 0.4282168534356468646245),
    ];

    #[test]
    fn orthant_probabilities_within_three_se() {
        for (rho, want) in ORTHANTS {
            let p = MvnProblem::new(
                vec![0.0, 0.0],
                vec![f64::INFINITY, f64::INFINITY],
                corr2(rho),
            )
            .unwrap();
            let l = dense_cholesky(&p.sigma).unwrap();
            let est = sov_estimate(&p, &l, &McConfig::new(20_000, 7)).unwrap();
            assert!(
                (est.value - want).abs() <= 3.0 * est.std_error + 1e-12,
                "rho={rho}: {} vs {want} (se {})",
                est.value,
                est.std_error
            );
        }
    }

    #[test]
    fn identity_covariance_is_product_of_cdfs() {
        let n = 25;
        let b: Vec<f64> = (0..n).map(|i| 0.3 + 0.1 * (i as f64 % 7.0)).collect();
        let truth: f64 = b.iter().map(|&x| norm_cdf(x)).product();
        let p = MvnProblem::new(vec![f64::NEG_INFINITY; n], b, DenseSpd::identity(n)).unwrap();
        let l = dense_cholesky(&p.sigma).unwrap();
        let est = sov_estimate(&p, &l, &McConfig::new(128, 3)).unwrap();
        // Independent coordinates make every sample identical: only roundoff
        // separates the estimate from the exact product.
        assert!((est.value - truth).abs() <= 3.0 * est.std_error + 1e-12 * truth);
    }

    #[test]
    fn deterministic_across_repeats_and_seeds_differ() {
        let p = MvnProblem::new(vec![-1.0, -0.5], vec![0.5, 2.0], corr2(0.6)).unwrap();
        let l = dense_cholesky(&p.sigma).unwrap();
        let e1 = sov_estimate(&p, &l, &McConfig::new(4000, 11)).unwrap();
        let e2 = sov_estimate(&p, &l, &McConfig::new(4000, 11)).unwrap();
        assert_eq!(e1.value.to_bits(), e2.value.to_bits());
        assert_eq!(e1.std_error.to_bits(), e2.std_error.to_bits());
        let e3 = sov_estimate(&p, &l, &McConfig::new(4000, 12)).unwrap();
        assert_ne!(e1.value.to_bits(), e3.value.to_bits());
    }

    #[test]
    fn antithetic_matches_plain_in_expectation() {
        let p = MvnProblem::new(vec![0.0, 0.0], vec![f64::INFINITY, f64::INFINITY], corr2(0.5))
            .unwrap();
        let l = dense_cholesky(&p.sigma).unwrap();
        let plain = sov_estimate(&p, &l, &McConfig::new(20_000, 5)).unwrap();
        let anti = sov_estimate(
            &p,
            &l,
            &McConfig { r: 20_000, seed: 5, antithetic: true },
        )
        .unwrap();
        let tol = 3.0 * (plain.std_error.powi(2) + anti.std_error.powi(2)).sqrt();
        assert!((plain.value - anti.value).abs() <= tol);
        // Exact value is 1/3.
        assert!((anti.value - 1.0 / 3.0).abs() <= 3.0 * anti.std_error);
    }

    #[test]
    fn antithetic_requires_even_r() {
        let p = MvnProblem::new(vec![0.0], vec![1.0], DenseSpd::identity(1)).unwrap();
        let l = dense_cholesky(&p.sigma).unwrap();
        let cfg = McConfig { r: 3, seed: 0, antithetic: true };
        assert!(matches!(
            sov_estimate(&p, &l, &cfg),
            Err(Error::BadSampleCount { .. })
        ));
        assert!(matches!(
            sov_estimate(&p, &l, &McConfig::new(1, 0)),
            Err(Error::BadSampleCount { .. })
        ));
    }

    #[test]
    fn rejects_inverted_and_mismatched_limits() {
        assert!(matches!(
            MvnProblem::new(vec![1.0], vec![0.5], DenseSpd::identity(1)),
            Err(Error::LimitsInverted { index: 0 })
        ));
        assert!(MvnProblem::new(vec![0.0], vec![0.5, 1.0], DenseSpd::identity(2)).is_err());
        assert!(MvnProblem::new(vec![f64::NAN], vec![1.0], DenseSpd::identity(1)).is_err());
    }

    #[test]
    fn univariate_reorder_picks_narrowest_first() {
        // Coordinate 1 has a much narrower window than coordinate 0.
        let p = MvnProblem::new(
            vec![f64::NEG_INFINITY, -0.1],
            vec![2.0, 0.1],
            DenseSpd::identity(2),
        )
        .unwrap();
        let rr = univariate_reorder(&p).unwrap();
        assert_eq!(rr.permutation, vec![1, 0]);
        assert_eq!(rr.a_perm, vec![-0.1, f64::NEG_INFINITY]);
        assert_eq!(rr.b_perm, vec![0.1, 2.0]);
    }

    #[test]
    fn univariate_reorder_ties_break_by_original_index() {
        let p = MvnProblem::new(
            vec![-0.5, -0.5, -0.5],
            vec![0.5, 0.5, 0.5],
            DenseSpd::identity(3),
        )
        .unwrap();
        let rr = univariate_reorder(&p).unwrap();
        assert_eq!(rr.permutation, vec![0, 1, 2]);
    }

    #[test]
    fn reordered_estimate_matches_original() {
        // Estimand is permutation invariant; compare the reordered estimate
        // to the identity-order estimate on a correlated 4-dim problem.
        let sigma = DenseSpd::from_entries(
            4,
            vec![
                1.0, 0.5, 0.3, 0.1, //
                0.5, 1.0, 0.4, 0.2, //
                0.3, 0.4, 1.0, 0.6, //
                0.1, 0.2, 0.6, 1.0,
            ],
        )
        .unwrap();
        let p = MvnProblem::new(
            vec![-2.0, -0.3, f64::NEG_INFINITY, 0.0],
            vec![0.5, 1.2, 0.8, 2.5],
            sigma,
        )
        .unwrap();
        let l = dense_cholesky(&p.sigma).unwrap();
        let direct = sov_estimate(&p, &l, &McConfig::new(60_000, 2)).unwrap();
        let rr = univariate_reorder(&p).unwrap();
        let factor = match &rr.factor {
            Factor::Dense(f) => f,
            _ => unreachable!(),
        };
        let permuted = MvnProblem::new(
            rr.a_perm.clone(),
            rr.b_perm.clone(),
            p.sigma.permuted(&rr.permutation).unwrap(),
        )
        .unwrap();
        let reordered = sov_estimate(&permuted, factor, &McConfig::new(60_000, 2)).unwrap();
        let tol = 3.0 * (direct.std_error.powi(2) + reordered.std_error.powi(2)).sqrt();
        assert!(
            (direct.value - reordered.value).abs() <= tol,
            "{} vs {}",
            direct.value,
            reordered.value
        );
    }

    #[test]
    fn block_reorder_identity_matches_product() {
        let n = 12;
        let b: Vec<f64> = (0..n).map(|i| 0.2 * (i as f64) - 0.8).collect();
        let truth: f64 = b.iter().map(|&x| norm_cdf(x)).product();
        let p =
            MvnProblem::new(vec![f64::NEG_INFINITY; n], b, DenseSpd::identity(n)).unwrap();
        let rr = block_reorder(&p, 4, 1e-4, &McConfig::new(1000, 9)).unwrap();
        let est = tlr_sov_estimate(&p, &rr, &McConfig::new(1000, 9)).unwrap();
        assert!((est.value - truth).abs() <= 3.0 * est.std_error + 1e-12 * truth);
    }

    #[test]
    fn block_reorder_sorts_blocks_ascending() {
        // Block 1 (indices 4..8) has far less mass than block 0; it must be
        // swept first after reordering.
        let n = 8;
        let mut a = vec![f64::NEG_INFINITY; n];
        let b = vec![2.0, 2.0, 2.0, 2.0, -1.5, -1.5, -1.5, -1.5];
        a.iter_mut().for_each(|x| *x = f64::NEG_INFINITY);
        let p = MvnProblem::new(a, b, DenseSpd::identity(n)).unwrap();
        let rr = block_reorder(&p, 4, 1e-4, &McConfig::new(100, 1)).unwrap();
        assert_eq!(&rr.permutation[..4], &[4, 5, 6, 7]);
        assert_eq!(rr.b_perm[0], -1.5);
    }

    #[test]
    fn tlr_single_block_bitwise_matches_dense() {
        // With one block and exact tolerance the tiled sweep must follow the
        // identical arithmetic path as the dense sweep.
        let sigma = DenseSpd::from_entries(
            3,
            vec![1.0, 0.4, 0.2, 0.4, 1.0, 0.5, 0.2, 0.5, 1.0],
        )
        .unwrap();
        let p = MvnProblem::new(
            vec![f64::NEG_INFINITY; 3],
            vec![0.7, -0.2, 1.5],
            sigma,
        )
        .unwrap();
        let rr = block_reorder(&p, 3, 0.0, &McConfig::new(512, 21)).unwrap();
        let est_tlr = tlr_sov_estimate(&p, &rr, &McConfig::new(512, 21)).unwrap();
        let factor = dense_cholesky(&p.sigma.permuted(&rr.permutation).unwrap()).unwrap();
        let permuted = MvnProblem::new(
            rr.a_perm.clone(),
            rr.b_perm.clone(),
            p.sigma.permuted(&rr.permutation).unwrap(),
        )
        .unwrap();
        let est_dense = sov_estimate(&permuted, &factor, &McConfig::new(512, 21)).unwrap();
        assert_eq!(est_tlr.value.to_bits(), est_dense.value.to_bits());
        assert_eq!(est_tlr.std_error.to_bits(), est_dense.std_error.to_bits());
    }

    #[test]
    fn estimates_lie_in_unit_interval_with_finite_se() {
        let seeds = [1u64, 2, 3, 4, 5];
        for (si, &seed) in seeds.iter().enumerate() {
            let rho = -0.8 + 0.4 * si as f64;
            let p = MvnProblem::new(vec![-9.0, -9.0], vec![-5.0, 9.0], corr2(rho)).unwrap();
            let l = dense_cholesky(&p.sigma).unwrap();
            let est = sov_estimate(&p, &l, &McConfig::new(500, seed)).unwrap();
            assert!(est.value >= 0.0 && est.value <= 1.0);
            assert!(est.std_error.is_finite());
            assert_eq!(est.r_used, 500);
        }
    }
}
