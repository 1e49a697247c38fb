//! Statistical agreement between the Monte Carlo estimators and an
//! independent quadrature oracle on problems small enough to integrate
//! directly.

use probit_gp::probit::{extend_problem_with_mean, predict_ratio_with_mean};
use probit_gp::rng::Counter;
use probit_gp::vb::predict_vb_with_mean;
use probit_gp::{
    cavi_fit, dense_cholesky, marginal_likelihood, predict_ratio, predict_vb, sov_estimate,
    DenseSpd, KernelSpec64, LikelihoodMethod, Locations, McConfig, MvnProblem, ProbitGpModel64,
};
use probit_gp_oracle as oracle;

fn mc(r: usize, seed: u64) -> McConfig {
    McConfig { r, seed, antithetic: false }
}

/// Deterministic scattered 1-D locations with unit-order spacing.
fn scattered_locs(n: usize, seed: u64) -> Locations<f64> {
    let ctr = Counter::new(seed);
    let mut x = 0.0;
    let pts = (0..n)
        .map(|i| {
            x += 0.2 + ctr.uniform(i as u64, 0);
            vec![x]
        })
        .collect();
    Locations::new(pts).unwrap()
}

fn random_model(n: usize, seed: u64) -> ProbitGpModel64 {
    let ctr = Counter::new(seed);
    let locs = scattered_locs(n, seed ^ 0x55);
    let alpha = 0.5 + 3.0 * ctr.uniform(0, 1);
    let kernel = KernelSpec64::squared_exponential(alpha).unwrap();
    let y: Vec<u8> = (0..n).map(|i| u8::from(ctr.uniform(i as u64, 2) < 0.5)).collect();
    let xi: Vec<f64> = (0..n).map(|i| 3.0 * ctr.uniform(i as u64, 3) - 1.5).collect();
    ProbitGpModel64::new(locs, y, kernel).unwrap().with_mean(xi).unwrap()
}

#[test]
fn marginal_likelihood_matches_latent_quadrature() {
    for n in 1..=3usize {
        for trial in 0..3u64 {
            let model = random_model(n, 901 + 7 * trial + 100 * n as u64);
            let truth =
                oracle::ml_quad_latent(model.y(), model.xi(), model.omega().as_slice());
            let cfg = mc(20_000, 4_200 + trial);

            let dense = marginal_likelihood(&model, &cfg, &LikelihoodMethod::Dense).unwrap();
            let tol = (3.0 * dense.std_error).max(1e-3);
            assert!(
                (dense.value - truth).abs() <= tol,
                "dense n={n} trial={trial}: {} vs {truth} (tol {tol})",
                dense.value
            );

            let tlr = marginal_likelihood(
                &model,
                &cfg,
                &LikelihoodMethod::Tlr { block_size: n.div_ceil(2), tol: 1e-4 },
            )
            .unwrap();
            let tol = (3.0 * tlr.std_error).max(1e-3);
            assert!(
                (tlr.value - truth).abs() <= tol,
                "tlr n={n} trial={trial}: {} vs {truth} (tol {tol})",
                tlr.value
            );
        }
    }
}

#[test]
fn predictive_ratio_matches_quadrature_ratio() {
    for n in 1..=3usize {
        let model = random_model(n, 3_311 + n as u64);
        // A new location interleaved with the training points.
        let x_new = vec![model.locs().point(0)[0] + 0.11];
        for (m_new, seed) in [(0.0, 50u64), (-0.6, 51)] {
            let ext = extend_problem_with_mean(&model, &x_new, m_new).unwrap();
            let truth =
                oracle::predictive_quad(model.y(), &ext.xi_star, ext.omega_star.as_slice());
            let est = predict_ratio_with_mean(
                &model,
                &x_new,
                m_new,
                &mc(40_000, seed),
                n.div_ceil(2),
                1e-4,
            )
            .unwrap();
            let tol = (3.0 * est.std_error).max(1e-3);
            assert!(
                (est.value - truth).abs() <= tol,
                "n={n} m_new={m_new}: {} vs {truth} (tol {tol})",
                est.value
            );
        }
    }
}

#[test]
fn mean_field_predictive_close_to_quadrature() {
    // The factorized approximation is not exact for correlated training
    // latents; the bound here is an engineering tolerance on top of the
    // Monte Carlo band.
    for n in 1..=3usize {
        let model = random_model(n, 77 + n as u64);
        let x_new = vec![model.locs().point(n - 1)[0] - 0.13];
        let ext = extend_problem_with_mean(&model, &x_new, 0.0).unwrap();
        let truth = oracle::predictive_quad(model.y(), &ext.xi_star, ext.omega_star.as_slice());

        let factors = cavi_fit(&model, 1e-10, 500).unwrap();
        let est = predict_vb(&model, &factors, &x_new, &mc(20_000, 99)).unwrap();
        assert!(
            (est.value - truth).abs() <= 0.02 + 3.0 * est.std_error,
            "n={n}: vb {} vs quadrature {truth}",
            est.value
        );
    }
}

#[test]
fn box_probabilities_match_tensor_quadrature() {
    for n in 2..=4usize {
        let ctr = Counter::new(1_234 + n as u64);
        // Random SPD covariance A A^T + I/2 keeps conditioning moderate.
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = 2.0 * ctr.uniform(i as u64, j as u64) - 1.0;
            }
        }
        let mut sigma = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += a[i * n + k] * a[j * n + k];
                }
                sigma[i * n + j] = s + if i == j { 0.5 } else { 0.0 };
            }
        }
        let lo: Vec<f64> = (0..n).map(|i| -2.5 + 1.5 * ctr.uniform(i as u64, 7)).collect();
        let hi: Vec<f64> = (0..n)
            .map(|i| lo[i] + 0.5 + 2.5 * ctr.uniform(i as u64, 8))
            .collect();

        let truth = oracle::mvn_prob(&lo, &hi, &sigma);
        let p = MvnProblem::new(
            lo.clone(),
            hi.clone(),
            DenseSpd::from_entries(n, sigma.clone()).unwrap(),
        )
        .unwrap();
        let factor = dense_cholesky(&p.sigma).unwrap();
        let est = sov_estimate(&p, &factor, &mc(40_000, 5_000 + n as u64)).unwrap();
        let tol = 3.0 * est.std_error + 1e-6;
        assert!(
            (est.value - truth).abs() <= tol,
            "n={n}: {} vs {truth} (tol {tol})",
            est.value
        );
    }
}

#[test]
fn likelihood_shrinks_as_responses_accumulate() {
    // p(y_1..k+1) = p(y_1..k) p(y_k+1 | y_1..k) <= p(y_1..k); the Monte
    // Carlo estimates must respect this up to their joint error band.
    let full = random_model(8, 2_024);
    let cfg = mc(20_000, 31);
    let mut prev: Option<probit_gp::ProbEstimate64> = None;
    for k in 4..=8usize {
        let locs = Locations::new((0..k).map(|i| full.locs().point(i).to_vec()).collect())
            .unwrap();
        let model = ProbitGpModel64::new(locs, full.y()[..k].to_vec(), *full.kernel())
            .unwrap()
            .with_mean(full.xi()[..k].to_vec())
            .unwrap();
        let est = marginal_likelihood(&model, &cfg, &LikelihoodMethod::Dense).unwrap();
        if let Some(p) = prev {
            assert!(
                est.value <= p.value + 3.0 * (est.std_error + p.std_error),
                "k={k}: {} > {}",
                est.value,
                p.value
            );
        }
        prev = Some(est);
    }
}

#[test]
fn far_location_reduces_to_prior_with_mean() {
    // With vanishing cross-covariance both estimators collapse to the prior
    // predictive Phi(m / sqrt(1 + K(x,x))).
    let model = random_model(4, 640);
    let x_new = vec![model.locs().point(3)[0] + 500.0];
    let m_new = 0.7;
    let want = probit_gp::normal::norm_cdf(m_new / 2f64.sqrt());

    let ratio = predict_ratio_with_mean(&model, &x_new, m_new, &mc(4_000, 8), 2, 1e-4).unwrap();
    assert!(
        (ratio.value - want).abs() <= 3.0 * ratio.std_error + 1e-9,
        "ratio {} vs {want}",
        ratio.value
    );

    let factors = cavi_fit(&model, 1e-10, 500).unwrap();
    let vb = predict_vb_with_mean(&model, &factors, &x_new, m_new, &mc(4_000, 8)).unwrap();
    assert!(
        (vb.value - want).abs() <= 3.0 * vb.std_error + 1e-9,
        "vb {} vs {want}",
        vb.value
    );
}

#[test]
fn ratio_and_exact_sampler_agree_on_tiny_models() {
    // The accept-reject oracle draws from the exact truncated-normal
    // posterior; on a two-point model it must agree with the ratio
    // estimator within joint Monte Carlo error.
    let model = random_model(2, 415);
    let x_new = vec![model.locs().point(0)[0] + 0.21];
    let cfg = mc(20_000, 606);
    let exact = probit_gp::exact_tn_predict(&model, &x_new, &cfg).unwrap();
    let ratio = predict_ratio(&model, &x_new, &cfg, 1, 1e-4).unwrap();
    let tol = 3.0 * (exact.std_error + ratio.std_error) + 1e-3;
    assert!(
        (exact.value - ratio.value).abs() <= tol,
        "exact {} vs ratio {}",
        exact.value,
        ratio.value
    );
}
