//! Deterministic quadrature oracles for low-dimensional normal probabilities.
//!
//! Everything here is an independent cross-check for the Monte Carlo
//! estimators in the main crate: separate normal CDF/quantile implementation
//! (statrs), its own Cholesky, and tensor-product Gauss-Legendre quadrature
//! instead of sampling. Deliberately limited to four dimensions, where
//! tensor quadrature is both fast and accurate to ~1e-8.

use statrs::distribution::{ContinuousCDF, Normal};

fn unit_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Standard normal CDF (independent of the main crate's implementation).
pub fn phi(x: f64) -> f64 {
    unit_normal().cdf(x)
}

/// Standard normal quantile.
pub fn phi_inv(p: f64) -> f64 {
    unit_normal().inverse_cdf(p)
}

/// Standard normal density.
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence (no coefficient tables).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess for the i-th root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n(x) and P'_n(x) by the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Dense Cholesky of a row-major n x n matrix; None if not positive
/// definite.
pub fn cholesky(n: usize, a: &[f64]) -> Option<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Conditional CDF pair (d, e) at the i-th step of the separation of
/// variables, given the shift from earlier coordinates.
fn cond_cdfs(a: f64, b: f64, shift: f64, lii: f64) -> (f64, f64) {
    let d = if a.is_finite() { phi((a - shift) / lii) } else { 0.0 };
    let e = if b.is_finite() { phi((b - shift) / lii) } else { 1.0 };
    (d, e)
}

/// P(a <= X <= b) for X ~ N(0, Sigma), n <= 4, by tensor Gauss-Legendre
/// quadrature in the whitened coordinates.
///
/// Each z_i runs over its conditional box clipped to +-9 (mass beyond is
/// < 2e-19) and rescaled to a fixed grid, so the integrand
/// prod_i width_i * phi(z_i) is analytic on the cube and the rule converges
/// spectrally; substituting through the inverse CDF instead would blow up
/// the derivative at infinite box edges and stall near 1e-7.
pub fn mvn_prob(a: &[f64], b: &[f64], sigma: &[f64]) -> f64 {
    let n = a.len();
    assert!(n >= 1 && n <= 4, "quadrature oracle supports 1..=4 dims");
    assert_eq!(b.len(), n);
    assert_eq!(sigma.len(), n * n);
    let l = cholesky(n, sigma).expect("oracle covariance must be positive definite");
    if n == 1 {
        let (d, e) = cond_cdfs(a[0], b[0], 0.0, l[0]);
        return (e - d).max(0.0);
    }
    const CLIP: f64 = 9.0;
    // Per-axis node count: generous at low dimension, still fast at n = 4.
    let m = match n {
        2 => 200,
        3 => 96,
        _ => 64,
    };
    let (nodes, weights) = gauss_legendre(m);
    // s in (0,1): rescale from [-1,1].
    let s: Vec<f64> = nodes.iter().map(|x| 0.5 * (x + 1.0)).collect();
    let ws: Vec<f64> = weights.iter().map(|w| 0.5 * w).collect();
    let dims = n - 1;
    let mut idx = vec![0usize; dims];
    let mut total = 0.0;
    'outer: loop {
        // One evaluation of the conditional-box integrand at this node.
        let mut z = vec![0.0; n];
        let mut f = 1.0;
        for i in 0..n {
            let mut shift = 0.0;
            for j in 0..i {
                shift += l[i * n + j] * z[j];
            }
            let lii = l[i * n + i];
            if i < dims {
                let lo = if a[i].is_finite() {
                    ((a[i] - shift) / lii).clamp(-CLIP, CLIP)
                } else {
                    -CLIP
                };
                let hi = if b[i].is_finite() {
                    ((b[i] - shift) / lii).clamp(-CLIP, CLIP)
                } else {
                    CLIP
                };
                let width = hi - lo;
                if width <= 0.0 {
                    f = 0.0;
                    break;
                }
                z[i] = lo + width * s[idx[i]];
                f *= ws[idx[i]] * width * pdf(z[i]);
            } else {
                // The innermost coordinate integrates in closed form.
                let (d, e) = cond_cdfs(a[i], b[i], shift, lii);
                f *= (e - d).max(0.0);
            }
        }
        total += f;
        // Advance the tensor index.
        for k in 0..dims {
            idx[k] += 1;
            if idx[k] < m {
                continue 'outer;
            }
            idx[k] = 0;
        }
        break;
    }
    total
}

/// Marginal likelihood of a probit model by direct latent-space quadrature:
/// p(y) = E_{f ~ N(xi, Omega)} [ prod_i Phi((2 y_i - 1) f_i) ], n <= 4.
///
/// Substitutes f = xi + L t with t standard normal and integrates the
/// product against the normal density over [-9, 9]^n.
pub fn ml_quad_latent(y: &[u8], xi: &[f64], omega: &[f64]) -> f64 {
    let n = y.len();
    assert!(n >= 1 && n <= 4, "quadrature oracle supports 1..=4 dims");
    assert_eq!(xi.len(), n);
    assert_eq!(omega.len(), n * n);
    let l = cholesky(n, omega).expect("oracle covariance must be positive definite");
    let m = match n {
        1 => 400,
        2 => 160,
        3 => 96,
        _ => 48,
    };
    let (nodes, weights) = gauss_legendre(m);
    const HALF_WIDTH: f64 = 9.0;
    let t: Vec<f64> = nodes.iter().map(|x| HALF_WIDTH * x).collect();
    // Gauss weight times the standard normal density at the node.
    let wq: Vec<f64> = weights
        .iter()
        .zip(&t)
        .map(|(w, ti)| {
            HALF_WIDTH * w * (-0.5 * ti * ti).exp() / (2.0 * std::f64::consts::PI).sqrt()
        })
        .collect();
    let signs: Vec<f64> = y.iter().map(|&v| 2.0 * f64::from(v) - 1.0).collect();
    let mut idx = vec![0usize; n];
    let mut total = 0.0;
    'outer: loop {
        let mut weight = 1.0;
        let mut prod = 1.0;
        for i in 0..n {
            weight *= wq[idx[i]];
            let mut f_i = xi[i];
            for j in 0..=i {
                f_i += l[i * n + j] * t[idx[j]];
            }
            prod *= phi(signs[i] * f_i);
        }
        total += weight * prod;
        for k in 0..n {
            idx[k] += 1;
            if idx[k] < m {
                continue 'outer;
            }
            idx[k] = 0;
        }
        break;
    }
    total
}

/// Predictive probability p(y_new = 1 | y) by the ratio of two latent-space
/// quadratures: the extended problem (y with a trailing 1, mean and
/// covariance including the new location) over the training problem.
/// `xi_star` has length n+1 and `omega_star` is (n+1) x (n+1); y has length
/// n <= 3.
pub fn predictive_quad(y: &[u8], xi_star: &[f64], omega_star: &[f64]) -> f64 {
    let n = y.len();
    assert!(n >= 1 && n <= 3);
    let m = n + 1;
    assert_eq!(xi_star.len(), m);
    assert_eq!(omega_star.len(), m * m);
    let mut y_star = y.to_vec();
    y_star.push(1);
    let num = ml_quad_latent(&y_star, xi_star, omega_star);
    let xi: Vec<f64> = xi_star[..n].to_vec();
    let mut omega = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            omega[i * n + j] = omega_star[i * m + j];
        }
    }
    let den = ml_quad_latent(y, &xi, &omega);
    num / den
}
