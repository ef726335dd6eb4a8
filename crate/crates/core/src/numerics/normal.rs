//! Normal density, distribution function and quantile function.
//!
//! The CDF is computed through Cody's rational approximations for erf/erfc
//! (relative error below 1e-15 in the bulk), and the quantile through
//! Acklam's rational approximation polished by Newton steps against the
//! high-accuracy CDF. Posterior tails drive credible interval endpoints, so
//! tail accuracy matters more here than raw speed.
#![allow(clippy::excessive_precision)]

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const LN_SQRT_2PI: f64 = 0.918938533204672741780329736406;
/// 1/sqrt(pi)
const FRAC_1_SQRT_PI: f64 = 0.564189583547756286948079451561;

/// Density of `N(mean, sd^2)` at `x`.
pub fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    assert!(sd > 0.0, "normal_pdf: sd must be positive, got {sd}");
    let z = (x - mean) / sd;
    (-0.5 * z * z - LN_SQRT_2PI).exp() / sd
}

/// Log-density of `N(mean, sd^2)` at `x`.
pub fn normal_log_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    assert!(sd > 0.0, "normal_log_pdf: sd must be positive, got {sd}");
    let z = (x - mean) / sd;
    -0.5 * z * z - LN_SQRT_2PI - sd.ln()
}

/// Distribution function of `N(mean, sd^2)` at `x`.
pub fn normal_cdf(x: f64, mean: f64, sd: f64) -> f64 {
    assert!(sd > 0.0, "normal_cdf: sd must be positive, got {sd}");
    std_normal_cdf((x - mean) / sd)
}

/// Standard normal CDF, accurate to full double precision via erfc.
pub(crate) fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Standard normal survival function `1 - Phi(z)`, without cancellation for
/// large `z`.
pub(crate) fn std_normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// Quantile (inverse CDF) of `N(mean, sd^2)`.
pub fn normal_quantile(p: f64, mean: f64, sd: f64) -> f64 {
    assert!(sd > 0.0, "normal_quantile: sd must be positive, got {sd}");
    assert!(
        p > 0.0 && p < 1.0,
        "normal_quantile: p must lie in (0, 1), got {p}"
    );
    mean + sd * std_normal_quantile(p)
}

pub(crate) fn std_normal_quantile(p: f64) -> f64 {
    // Work on the lower half so the Newton residual is formed from the small
    // tail probability (no cancellation near 1).
    if p == 0.5 {
        0.0
    } else if p < 0.5 {
        lower_quantile(p)
    } else {
        -lower_quantile(1.0 - p)
    }
}

/// Inverse standard normal CDF for `p` in `(0, 0.5]`; result is `<= 0`.
fn lower_quantile(p: f64) -> f64 {
    let mut x = acklam(p);
    // Two Newton polish steps; Phi(x) for x <= 0 is half an erfc of a
    // positive argument, hence fully accurate in absolute and relative terms.
    for _ in 0..2 {
        let err = std_normal_cdf(x) - p;
        if err == 0.0 {
            break;
        }
        let pdf = (-0.5 * x * x - LN_SQRT_2PI).exp();
        if pdf <= f64::MIN_POSITIVE {
            break;
        }
        x -= err / pdf;
    }
    x.min(0.0)
}

/// Acklam's rational initial guess for the inverse normal CDF (relative
/// error about 1e-9), lower branch.
fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Complementary error function after W. J. Cody (1969).
pub(crate) fn erfc(x: f64) -> f64 {
    let y = x.abs();
    let result = if y <= 0.46875 {
        return 1.0 - erf_small(x);
    } else if y <= 4.0 {
        erfc_mid(y)
    } else {
        erfc_large(y)
    };
    if x < 0.0 {
        2.0 - result
    } else {
        result
    }
}

/// erf(x) for |x| <= 0.46875.
fn erf_small(x: f64) -> f64 {
    const A: [f64; 5] = [
        3.16112374387056560e+00,
        1.13864154151050156e+02,
        3.77485237685302021e+02,
        3.20937758913846947e+03,
        1.85777706184603153e-01,
    ];
    const B: [f64; 4] = [
        2.36012909523441209e+01,
        2.44024637934444173e+02,
        1.28261652607737228e+03,
        2.84423683343917062e+03,
    ];
    let z = x * x;
    let mut num = A[4] * z;
    let mut den = z;
    for i in 0..3 {
        num = (num + A[i]) * z;
        den = (den + B[i]) * z;
    }
    x * (num + A[3]) / (den + B[3])
}

/// erfc(y) for 0.46875 < y <= 4.
fn erfc_mid(y: f64) -> f64 {
    const C: [f64; 9] = [
        5.64188496988670089e-01,
        8.88314979438837594e+00,
        6.61191906371416295e+01,
        2.98635138197400131e+02,
        8.81952221241769090e+02,
        1.71204761263407058e+03,
        2.05107837782607147e+03,
        1.23033935479799725e+03,
        2.15311535474403846e-08,
    ];
    const D: [f64; 8] = [
        1.57449261107098347e+01,
        1.17693950891312499e+02,
        5.37181101862009858e+02,
        1.62138957456669019e+03,
        3.29079923573345963e+03,
        4.36261909014324716e+03,
        3.43936767414372164e+03,
        1.23033935480374942e+03,
    ];
    let mut num = C[8] * y;
    let mut den = y;
    for i in 0..7 {
        num = (num + C[i]) * y;
        den = (den + D[i]) * y;
    }
    exp_neg_sq(y) * (num + C[7]) / (den + D[7])
}

/// erfc(y) for y > 4.
fn erfc_large(y: f64) -> f64 {
    const P: [f64; 6] = [
        3.05326634961232344e-01,
        3.60344899949804439e-01,
        1.25781726111229246e-01,
        1.60837851487422766e-02,
        6.58749161529837803e-04,
        1.63153871373020978e-02,
    ];
    const Q: [f64; 5] = [
        2.56852019228982242e+00,
        1.87295284992346047e+00,
        5.27905102951428412e-01,
        6.05183413124413191e-02,
        2.33520497626869185e-03,
    ];
    if y >= 26.6 {
        // erfc underflows to zero well before here.
        return 0.0;
    }
    let z = 1.0 / (y * y);
    let mut num = P[5] * z;
    let mut den = z;
    for i in 0..4 {
        num = (num + P[i]) * z;
        den = (den + Q[i]) * z;
    }
    let r = z * (num + P[4]) / (den + Q[4]);
    exp_neg_sq(y) * (FRAC_1_SQRT_PI - r) / y
}

/// exp(-y^2) with the argument split to avoid rounding in y*y.
fn exp_neg_sq(y: f64) -> f64 {
    let ysq = (y * 16.0).trunc() / 16.0;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp()
}
