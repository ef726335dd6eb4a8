//! Bracketed root finding and scalar minimization (Brent's methods).
//!
//! Both routines are deliberately bracketed-only: the marginal likelihood is
//! often extremely flat in `tau` near zero, where open Newton-type iterations
//! wander off.

use super::Interval;
use crate::error::{Error, Result};

const MAX_ITER: usize = 200;

/// Find a root of `f` inside `bracket`, which must satisfy
/// `f(lo) * f(hi) <= 0`. Brent's method: bisection with secant/inverse
/// quadratic acceleration.
pub fn find_root<F: FnMut(f64) -> f64>(mut f: F, bracket: Interval, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (bracket.lo(), bracket.hi());
    if !bracket.is_finite() {
        return Err(Error::domain("find_root: bracket must be finite"));
    }
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::domain(format!(
            "find_root: invalid bracket [{a}, {b}]: f has the same sign at both ends \
             ({fa:.3e}, {fb:.3e})"
        )));
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for _ in 0..MAX_ITER {
        if fb.abs() > fc.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += tol1.copysign(xm);
        }
        fb = f(b);
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    Ok(b)
}

/// Minimize `f` on `bracket` (golden section with parabolic acceleration).
/// Returns `(x_min, f(x_min))`.
pub fn minimize_scalar<F: FnMut(f64) -> f64>(
    mut f: F,
    bracket: Interval,
    tol: f64,
) -> Result<(f64, f64)> {
    if !bracket.is_finite() {
        return Err(Error::domain("minimize_scalar: bracket must be finite"));
    }
    const CGOLD: f64 = 0.381966011250105;
    const ZEPS: f64 = 1e-14;

    let (mut a, mut b) = (bracket.lo(), bracket.hi());
    let mut x = a + CGOLD * (b - a);
    let mut w = x;
    let mut v = x;
    let mut fx = f(x);
    let mut fw = fx;
    let mut fv = fx;
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;

    for _ in 0..MAX_ITER {
        let xm = 0.5 * (a + b);
        let tol1 = tol * x.abs() + ZEPS;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            return Ok((x, fx));
        }
        let mut use_golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                use_golden = false;
            }
        }
        if use_golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else {
            x + tol1.copysign(d)
        };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Ok((x, fx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::normal_cdf;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sqrt_two() {
        let root = find_root(
            |x| x * x - 2.0,
            Interval::new(0.0, 2.0).unwrap(),
            1e-12,
        )
        .unwrap();
        assert_abs_diff_eq!(root, std::f64::consts::SQRT_2, epsilon = 1e-6);
    }

    #[test]
    fn invalid_bracket_is_rejected() {
        let err = find_root(|x| x * x + 1.0, Interval::new(0.0, 2.0).unwrap(), 1e-12);
        assert!(err.is_err());
    }

    #[test]
    fn normal_quantile_via_root() {
        let root = find_root(
            |x| normal_cdf(x, 0.0, 1.0) - 0.975,
            Interval::new(0.0, 8.0).unwrap(),
            1e-12,
        )
        .unwrap();
        assert_abs_diff_eq!(root, 1.959964, epsilon = 1e-6);
    }

    #[test]
    fn parabola_minimum() {
        let (x, fx) = minimize_scalar(
            |x| (x - 3.0) * (x - 3.0),
            Interval::new(0.0, 10.0).unwrap(),
            1e-10,
        )
        .unwrap();
        assert_abs_diff_eq!(x, 3.0, epsilon = 1e-6);
        assert!(fx < 1e-10);
    }
}
