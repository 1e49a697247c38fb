//! Randomized invariants: estimates stay inside their ranges, reorderings
//! are bijections that only relabel the problem, and repeated runs are
//! bit-reproducible.

use proptest::prelude::*;

use probit_gp::{
    block_reorder, dense_cholesky, marginal_likelihood, predict_ratio, sov_estimate, tn_sample,
    univariate_reorder, DenseSpd, KernelSpec64, LikelihoodMethod, Locations, McConfig,
    MvnProblem, ProbitGpModel64, TnSide,
};

fn mc(r: usize, seed: u64) -> McConfig {
    McConfig { r, seed, antithetic: false }
}

/// Random covariance A A^T + d I: symmetric positive definite by build.
fn spd_strategy(n: usize) -> impl Strategy<Value = DenseSpd<f64>> {
    (
        proptest::collection::vec(-1.0f64..1.0, n * n),
        0.3f64..2.0,
    )
        .prop_map(move |(a, d)| {
            let mut s = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    let mut acc = if i == j { d } else { 0.0 };
                    for k in 0..n {
                        acc += a[i * n + k] * a[j * n + k];
                    }
                    s[i * n + j] = acc;
                }
            }
            DenseSpd::from_entries(n, s).unwrap()
        })
}

/// Limits with a mix of finite and infinite endpoints, always a < b.
fn limits_strategy(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    proptest::collection::vec(
        (-3.0f64..1.0, 0.2f64..3.0, 0u8..4),
        n,
    )
    .prop_map(|rows| {
        let mut a = Vec::with_capacity(rows.len());
        let mut b = Vec::with_capacity(rows.len());
        for (lo, width, kind) in rows {
            match kind {
                0 => {
                    a.push(f64::NEG_INFINITY);
                    b.push(lo + width);
                }
                1 => {
                    a.push(lo);
                    b.push(f64::INFINITY);
                }
                2 => {
                    a.push(f64::NEG_INFINITY);
                    b.push(f64::INFINITY);
                }
                _ => {
                    a.push(lo);
                    b.push(lo + width);
                }
            }
        }
        (a, b)
    })
}

fn problem_strategy() -> impl Strategy<Value = MvnProblem<f64>> {
    (2usize..=5)
        .prop_flat_map(|n| (spd_strategy(n), limits_strategy(n)))
        .prop_map(|(sigma, (a, b))| MvnProblem::new(a, b, sigma).unwrap())
}

/// Model over scattered 1-D locations; gaps keep the covariance comfortably
/// positive definite.
fn model_strategy() -> impl Strategy<Value = ProbitGpModel64> {
    (1usize..=10)
        .prop_flat_map(|n| {
            (
                proptest::collection::vec(0.25f64..1.0, n),
                proptest::collection::vec(proptest::bool::ANY, n),
                proptest::collection::vec(-1.5f64..1.5, n),
                0.5f64..8.0,
            )
        })
        .prop_map(|(gaps, resp, xi, alpha)| {
            let mut x = 0.0;
            let pts = gaps
                .iter()
                .map(|g| {
                    x += g;
                    vec![x]
                })
                .collect();
            let locs = Locations::new(pts).unwrap();
            let y = resp.iter().map(|&b| u8::from(b)).collect();
            let kernel = KernelSpec64::squared_exponential(alpha).unwrap();
            ProbitGpModel64::new(locs, y, kernel).unwrap().with_mean(xi).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn estimates_stay_in_unit_interval(p in problem_strategy(), seed in 0u64..1000) {
        let factor = dense_cholesky(&p.sigma).unwrap();
        let est = sov_estimate(&p, &factor, &mc(128, seed)).unwrap();
        prop_assert!((0.0..=1.0).contains(&est.value), "value {}", est.value);
        prop_assert!(est.std_error.is_finite() && est.std_error >= 0.0);
    }

    #[test]
    fn univariate_reorder_is_a_bijective_relabeling(p in problem_strategy()) {
        let rr = univariate_reorder(&p).unwrap();
        let n = p.n();
        let mut seen = vec![false; n];
        for &k in &rr.permutation {
            prop_assert!(k < n && !seen[k], "not a permutation");
            seen[k] = true;
        }
        for (pos, &orig) in rr.permutation.iter().enumerate() {
            prop_assert_eq!(rr.a_perm[pos].to_bits(), p.a[orig].to_bits());
            prop_assert_eq!(rr.b_perm[pos].to_bits(), p.b[orig].to_bits());
        }
    }

    #[test]
    fn block_reorder_is_a_bijective_relabeling(
        p in problem_strategy(),
        block_size in 1usize..=5,
        seed in 0u64..1000,
    ) {
        let block_size = block_size.min(p.n());
        let rr = block_reorder(&p, block_size, 1e-6, &mc(64, seed)).unwrap();
        let n = p.n();
        let mut seen = vec![false; n];
        for &k in &rr.permutation {
            prop_assert!(k < n && !seen[k], "not a permutation");
            seen[k] = true;
        }
        for (pos, &orig) in rr.permutation.iter().enumerate() {
            prop_assert_eq!(rr.a_perm[pos].to_bits(), p.a[orig].to_bits());
            prop_assert_eq!(rr.b_perm[pos].to_bits(), p.b[orig].to_bits());
        }
    }

    #[test]
    fn predictions_strictly_inside_unit_interval(
        model in model_strategy(),
        offset in 0.01f64..0.2,
        m_new in prop_oneof![Just(-30.0f64), Just(0.0), Just(30.0)],
        seed in 0u64..1000,
    ) {
        let x_new = vec![model.locs().point(0)[0] - offset];
        let bs = model.n().div_ceil(2);
        let est = probit_gp::probit::predict_ratio_with_mean(
            &model, &x_new, m_new, &mc(64, seed), bs, 1e-4,
        ).unwrap();
        prop_assert!(est.value > 0.0 && est.value < 1.0, "value {}", est.value);
    }

    #[test]
    fn truncated_normal_draws_respect_their_support(
        loc in -20.0f64..20.0,
        scale in 0.01f64..10.0,
        positive in proptest::bool::ANY,
        r in 0u64..2000,
    ) {
        let side = if positive { TnSide::Positive } else { TnSide::Negative };
        let ctr = probit_gp::rng::Counter::new(9);
        let z = tn_sample(loc, scale, side, &ctr, r, 0);
        match side {
            TnSide::Positive => prop_assert!(z > 0.0, "z = {z}"),
            TnSide::Negative => prop_assert!(z < 0.0, "z = {z}"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn repeated_runs_reproduce_every_bit(model in model_strategy(), seed in 0u64..1000) {
        let cfg = mc(128, seed);
        let bs = model.n().div_ceil(2);
        let method = LikelihoodMethod::Tlr { block_size: bs, tol: 1e-4 };
        // A from-scratch rebuild carries no shared cache: the same bits must
        // still come out.
        let fresh = ProbitGpModel64::new(
            model.locs().clone(),
            model.y().to_vec(),
            *model.kernel(),
        )
        .unwrap()
        .with_mean(model.xi().to_vec())
        .unwrap();
        let a = marginal_likelihood(&model, &cfg, &method).unwrap();
        let b = marginal_likelihood(&fresh, &cfg, &method).unwrap();
        prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
        prop_assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());

        let x_new = vec![model.locs().point(model.n() - 1)[0] + 0.4];
        let p1 = predict_ratio(&model, &x_new, &cfg, bs, 1e-4).unwrap();
        let p2 = predict_ratio(&model, &x_new, &cfg, bs, 1e-4).unwrap();
        prop_assert_eq!(p1.value.to_bits(), p2.value.to_bits());
    }
}
