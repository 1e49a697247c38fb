//! Standard-normal special functions: erfc, scaled erfc, CDF, quantile, and
//! the inverse Mills ratio, all generic over the scalar type.
//!
//! Everything is evaluated from Chebyshev expansions in transformed
//! variables: erf(x)/x in x^2 over the centre |x| < 1; the scaled-complement
//! tail R(x) = x (1/(sqrt(pi) erfcx(x)) - x) in x on [1, 4] and in 1/x^2
//! beyond; and three zones of the quantile. All tables were generated
//! offline against 60-digit references and the double-precision evaluation
//! was validated on dense grids: relative error stays below 1e-15
//! everywhere, and the round trip cdf(quantile(p)) stays within 8e-15 of p.
//! Coefficients are stored as `f64` and converted, so the `f32`
//! instantiation evaluates the same polynomials in `f32` arithmetic.

use crate::float::{c, Float};

/// Series/backbone crossover for the error function. The series side computes
/// erfc as 1 - erf, whose cancellation grows with x (about erf(x)/erfc(x),
/// ~5x at 1); the fitted tail starts where its transform variables are well
/// conditioned.
const SPLIT: f64 = 1.0;

/// Chebyshev coefficients of R(x) = x (1/(sqrt(pi) erfcx(x)) - x) on
/// x in [1, 4], variable u = (2x - 5)/3.
const R_TAIL_NEAR: [f64; 26] = [
    0.4198477408623774,
    0.07045209179834794,
    -0.022314716537514538,
    0.005894467114958983,
    -0.0013617636955499362,
    0.00028006527263255127,
    -5.13655068330827e-05,
    8.282196989108725e-06,
    -1.123032909345498e-06,
    1.1061275350689455e-07,
    -1.7230345631247575e-09,
    -2.666773130448688e-09,
    8.617865646112617e-10,
    -1.8373376271240908e-10,
    3.034538228248574e-11,
    -3.746504099254849e-12,
    2.275338735400945e-13,
    4.444885868454879e-14,
    -2.063945574047456e-14,
    4.987830633905416e-15,
    -9.01162822288785e-16,
    1.2400023000634935e-16,
    -1.0430993188609877e-17,
    -6.095972463081783e-19,
    5.09562215384817e-19,
    -1.3818206840618863e-19,
];

/// Same backbone on x in [4, inf), variable u = 32/x^2 - 1.
const R_TAIL_FAR: [f64; 18] = [
    0.4859234209624659,
    -0.013601682222983115,
    0.00045221525371539923,
    -2.133893022156461e-05,
    1.2498068907555653e-06,
    -8.557398254744574e-08,
    6.6235743781189654e-09,
    -5.672429555704901e-10,
    5.294890331055772e-11,
    -5.327386658020852e-12,
    5.727659500526611e-13,
    -6.534637597560937e-14,
    7.866028650305208e-15,
    -9.942304655465403e-16,
    1.3141142992857137e-16,
    -1.809906607402388e-17,
    2.5895083076482002e-18,
    -3.838321135139381e-19,
];

/// Quantile centre: Phi^-1(1/2 + rho)/rho as a function of s = rho^2 on
/// [0, 0.425^2], variable u = 2 s / 0.180625 - 1.
const QUANT_CENTRAL: [f64; 33] = [
    2.8734735392279016,
    0.4249523687457461,
    0.06986317633479358,
    0.014427118125591741,
    0.0033201004870131953,
    0.0008138065761203474,
    0.0002078684075374738,
    5.465725366773796e-05,
    1.468387347320025e-05,
    4.010738978258519e-06,
    1.1099824248795094e-06,
    3.1048977381831365e-07,
    8.76239942425181e-08,
    2.4913574468428183e-08,
    7.128727140667589e-09,
    2.0510368569795625e-09,
    5.929461330486637e-10,
    1.7214207115839077e-10,
    5.016271397490501e-11,
    1.4666377850066188e-11,
    4.300954062117301e-12,
    1.2646797027235999e-12,
    3.7278749232698614e-13,
    1.1013181717350946e-13,
    3.260262709486521e-14,
    9.669597016771747e-15,
    2.8728720300938122e-15,
    8.549085397951056e-16,
    2.547815625768706e-16,
    7.603544685268746e-17,
    2.2720786063283473e-17,
    6.797560949307054e-18,
    2.0359739659120085e-18,
];

/// Quantile near tail: -Phi^-1(p) as a function of r = sqrt(-ln p) on
/// [sqrt(-ln 0.075), 5] (p from 0.075 down to ~1.4e-11).
const QUANT_TAIL_NEAR: [f64; 28] = [
    4.091749275486175,
    2.5998984180303175,
    -0.04095581687344709,
    0.008813186240460506,
    -0.001964646271538623,
    0.0004487480508187507,
    -0.00010445539813804918,
    2.4702604517898015e-05,
    -5.9234067883284704e-06,
    1.4379812255536904e-06,
    -3.5294940862409643e-07,
    8.748228632646567e-08,
    -2.1871761137949118e-08,
    5.50999265979058e-09,
    -1.397382518860619e-09,
    3.564665955479494e-10,
    -9.140128424406423e-11,
    2.35424425491118e-11,
    -6.08824952774412e-12,
    1.5801030405620021e-12,
    -4.114049916434333e-13,
    1.0742560535755644e-13,
    -2.8124356576948934e-14,
    7.380611422934573e-15,
    -1.9411033256078052e-15,
    5.115334998052492e-16,
    -1.3505178488556312e-16,
    3.571633132109439e-17,
];

/// Quantile far tail: same function on r in [5, 27.6] (p down past the
/// smallest positive subnormal double, which has r ~ 27.3).
const QUANT_TAIL_FAR: [f64; 37] = [
    22.836387588562683,
    16.11081009249025,
    -0.043726026927966004,
    0.015305918491647892,
    -0.0054823662448958135,
    0.00199319988711321,
    -0.0007323443610746897,
    0.00027121415302423346,
    -0.00010106166031004217,
    3.784535626995472e-05,
    -1.4230200838108213e-05,
    5.3690639251604605e-06,
    -2.0316989072837373e-06,
    7.707719515426906e-07,
    -2.930668245920389e-07,
    1.1165474105764441e-07,
    -4.2616116118301737e-08,
    1.6292565246958533e-08,
    -6.238346574563084e-09,
    2.392046507281628e-09,
    -9.184458168201098e-10,
    3.5309482838144926e-10,
    -1.3591212756611785e-10,
    5.23761066821274e-11,
    -2.020684707260886e-11,
    7.80438696097929e-12,
    -3.0174512729833593e-12,
    1.1678595053393242e-12,
    -4.524580755772615e-13,
    1.754658699719554e-13,
    -6.811190961999026e-14,
    2.646423035951746e-14,
    -1.0291793486460122e-14,
    4.005974512713059e-15,
    -1.5606311629686856e-15,
    6.084948035214647e-16,
    -2.3744738280494643e-16,
];

/// sqrt(-ln 0.075): lower edge of the near-tail quantile zone.
const QUANT_R_LO: f64 = 1.6094306960679687;

/// 0.425^2: upper edge of the central quantile zone in s = rho^2.
const QUANT_S_MAX: f64 = 0.180625;

/// Clenshaw evaluation of c[0] + sum_{k>=1} c[k] T_k(u).
fn cheb<F: Float>(u: F, coef: &[f64]) -> F {
    let two = c::<F>(2.0);
    let mut b1 = F::zero();
    let mut b2 = F::zero();
    for &ck in coef[1..].iter().rev() {
        let b0 = c::<F>(ck) + two * u * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c::<F>(coef[0]) + u * b1 - b2
}

/// Backbone tail R(x) = x (1/(sqrt(pi) erfcx(x)) - x) for x >= 1. Bounded in
/// (0.3194..., 0.5); exposing it keeps every consumer free of cancellation:
/// erfcx comes out as a sum of positives and the Mills-gap as R itself.
fn r_tail<F: Float>(x: F) -> F {
    if x <= c::<F>(4.0) {
        cheb((c::<F>(2.0) * x - c::<F>(5.0)) / c::<F>(3.0), &R_TAIL_NEAR)
    } else {
        cheb(c::<F>(32.0) / (x * x) - F::one(), &R_TAIL_FAR)
    }
}

/// Scaled complement for x >= `SPLIT`, through the backbone:
/// erfcx(x) = x / (sqrt(pi) (x^2 + R(x))).
fn erfcx_above_split<F: Float>(x: F) -> F {
    x / (c::<F>(std::f64::consts::PI.sqrt()) * (x * x + r_tail(x)))
}

/// Chebyshev coefficients of erf(x)/x as a function of s = x^2 on [0, 1],
/// variable u = 2s - 1. erf is entire, so the expansion converges
/// super-geometrically; degree 13 reaches working precision.
const ERF_CENTER: [f64; 14] = [
    0.9754769393826541,
    -0.14226120510371365,
    0.010035582187599796,
    -0.0005768764699767485,
    2.741993125219606e-05,
    -1.1043175507344507e-06,
    3.8488755420345036e-08,
    -1.1808582533875466e-09,
    3.2334215826050907e-11,
    -7.991015947004549e-13,
    1.7990725113961456e-14,
    -3.718635487818693e-16,
    7.103599003714253e-18,
    -1.2612455119155226e-19,
];

/// erf(x) for |x| < `SPLIT`, as x * E(x^2); the odd symmetry rides on the
/// leading x factor.
fn erf_center<F: Float>(x: F) -> F {
    let s = x * x;
    x * cheb(c::<F>(2.0) * s - F::one(), &ERF_CENTER)
}

/// exp(-x^2) for x >= 0 with the argument split so the dominant squared term
/// is exact: rounding x^2 directly costs ~eps * x^2 absolute error in the
/// exponent, which at x ~ 27 is already ~1e-13 relative in the result.
fn exp_neg_sq<F: Float>(x: F) -> F {
    let sixteenth = c::<F>(16.0);
    // hi carries at most 9 leading mantissa bits over the erfc-relevant
    // range (x < 2^5), so hi * hi is exact even in f32; x - hi is exact by
    // closeness.
    let hi = (x * sixteenth).round() / sixteenth;
    (-hi * hi).exp() * (-(x - hi) * (x + hi)).exp()
}

/// Complementary error function.
pub fn erfc<F: Float>(x: F) -> F {
    if x.is_nan() {
        return x;
    }
    if x.is_infinite() {
        return if x > F::zero() { F::zero() } else { c::<F>(2.0) };
    }
    let split = c::<F>(SPLIT);
    if x >= split {
        // exp(-x^2) underflows past ~26.6 in f64; the product then rounds to 0,
        // which is the correct limit.
        erfcx_above_split(x) * exp_neg_sq(x)
    } else if x >= -split {
        F::one() - erf_center(x)
    } else {
        c::<F>(2.0) - erfc(-x)
    }
}

/// Scaled complementary error function exp(x^2) * erfc(x).
///
/// Stays O(1/x) for large positive x where erfc itself underflows; overflows
/// to +inf for x below about -26.6 (f64), matching the true magnitude.
pub fn erfcx<F: Float>(x: F) -> F {
    if x.is_nan() {
        return x;
    }
    if x.is_infinite() {
        return if x > F::zero() { F::zero() } else { F::infinity() };
    }
    let split = c::<F>(SPLIT);
    if x >= split {
        // Past 1e150, x^2 would overflow while the true value is still a
        // normal double; the backbone term R/x^2 is far below roundoff there.
        if x >= c::<F>(1e150) {
            return (c::<F>(std::f64::consts::PI.sqrt()) * x).recip();
        }
        erfcx_above_split(x)
    } else if x >= -split {
        (x * x).exp() * (F::one() - erf_center(x))
    } else {
        let e = (x * x).exp();
        c::<F>(2.0) * e - erfcx(-x)
    }
}

/// Standard normal density.
pub fn norm_pdf<F: Float>(x: F) -> F {
    c::<F>(1.0 / (2.0 * std::f64::consts::PI).sqrt()) * (-x * x * c::<F>(0.5)).exp()
}

/// Standard normal cumulative distribution function.
pub fn norm_cdf<F: Float>(x: F) -> F {
    c::<F>(0.5) * erfc(-x * c::<F>(std::f64::consts::FRAC_1_SQRT_2))
}

/// Phi(hi) - Phi(lo), evaluated on whichever tail keeps the subtraction
/// between like-sized small quantities instead of near-unit ones.
pub fn norm_cdf_diff<F: Float>(lo: F, hi: F) -> F {
    let inv_sqrt2 = c::<F>(std::f64::consts::FRAC_1_SQRT_2);
    let half = c::<F>(0.5);
    if lo >= F::zero() {
        half * (erfc(lo * inv_sqrt2) - erfc(hi * inv_sqrt2))
    } else if hi <= F::zero() {
        half * (erfc(-hi * inv_sqrt2) - erfc(-lo * inv_sqrt2))
    } else {
        norm_cdf(hi) - norm_cdf(lo)
    }
}

/// Inverse Mills ratio phi(t) / Phi(t).
///
/// Expressed through the scaled complement so the ratio stays finite and
/// accurate far into the left tail, where it approaches -t.
pub fn inv_mills<F: Float>(t: F) -> F {
    let arg = -t * c::<F>(std::f64::consts::FRAC_1_SQRT_2);
    c::<F>((2.0 / std::f64::consts::PI).sqrt()) / erfcx(arg)
}

/// t + inv_mills(t): the gap between the inverse Mills ratio and its left
/// asymptote -t (for t << 0 it decays like 1/|t|; this is e.g. the mean of a
/// standard normal conditioned to exceed -t).
///
/// Forming the sum directly cancels by a factor ~t^2 deep in the left tail,
/// so there the gap comes straight from the backbone: inv_mills(t) =
/// sqrt(2) (u + r(u)) at u = -t/sqrt(2) makes the gap exactly
/// sqrt(2) R(u) / u.
pub fn inv_mills_gap<F: Float>(t: F) -> F {
    let u = -t * c::<F>(std::f64::consts::FRAC_1_SQRT_2);
    if u >= c::<F>(2.0) {
        c::<F>(std::f64::consts::SQRT_2) * r_tail(u) / u
    } else {
        t + inv_mills(t)
    }
}

/// Standard normal quantile.
///
/// Returns -inf/+inf for p outside (0, 1) and NaN for NaN. Three fitted
/// zones: the centre as rho * C(rho^2) with rho = p - 1/2, the tails as
/// functions of sqrt(-ln p), split once more at p ~ 1.4e-11. No refinement
/// iterations; the tables alone were validated to ~6e-16 relative.
pub fn norm_quantile<F: Float>(p: F) -> F {
    if p.is_nan() {
        return p;
    }
    if p <= F::zero() {
        return F::neg_infinity();
    }
    if p >= F::one() {
        return F::infinity();
    }
    let half = c::<F>(0.5);
    // Work on the lower half only: for p > 1/2 the reflection 1 - p is exact
    // and the tail transform ln(p_low) keeps full relative precision.
    let (p_low, flip) = if p <= half { (p, false) } else { (F::one() - p, true) };

    let rho = half - p_low;
    let s = rho * rho;
    let x = if s <= c::<F>(QUANT_S_MAX) {
        let u = c::<F>(2.0) * s / c::<F>(QUANT_S_MAX) - F::one();
        -rho * cheb(u, &QUANT_CENTRAL)
    } else {
        let r = (-p_low.ln()).sqrt();
        if r <= c::<F>(5.0) {
            let u = (c::<F>(2.0) * r - c::<F>(QUANT_R_LO + 5.0)) / c::<F>(5.0 - QUANT_R_LO);
            -cheb(u, &QUANT_TAIL_NEAR)
        } else {
            let u = (c::<F>(2.0) * r - c::<F>(32.6)) / c::<F>(22.6);
            -cheb(u, &QUANT_TAIL_FAR)
        }
    };
    if flip {
        -x
    } else {
        x
    }
}
