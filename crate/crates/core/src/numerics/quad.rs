//! Adaptive Gauss-Kronrod quadrature (7-15 pair) with interval bisection.
//!
//! Semi-infinite domains are mapped onto `[0, 1)` via the monotone change of
//! variables `x = a + t/(1-t)`; doubly infinite domains are split at zero.
#![allow(clippy::excessive_precision, clippy::needless_range_loop)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::Interval;
use crate::error::{Error, Result};

/// Outcome of a quadrature run.
#[derive(Clone, Copy, Debug)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
}

/// One finished subinterval of an adaptive run, in original coordinates.
#[derive(Clone, Copy, Debug)]
pub struct Cell {
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
}

// 15-point Kronrod abscissae (positive half) and weights, 7-point Gauss
// weights embedded at the odd indices.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const MAX_SEGMENTS: usize = 8192;

/// One Gauss-Kronrod 15 pass over `[a, b]`: returns (value, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut res_gauss = f_center * WG[3];
    let mut res_kronrod = f_center * WGK[7];
    let mut res_abs = res_kronrod.abs();

    let mut fv1 = [0.0_f64; 7];
    let mut fv2 = [0.0_f64; 7];

    for j in 0..3 {
        let idx = 2 * j + 1;
        let absc = half * XGK[idx];
        let f1 = f(center - absc);
        let f2 = f(center + absc);
        fv1[idx] = f1;
        fv2[idx] = f2;
        let fsum = f1 + f2;
        res_gauss += WG[j] * fsum;
        res_kronrod += WGK[idx] * fsum;
        res_abs += WGK[idx] * (f1.abs() + f2.abs());
    }
    for j in 0..4 {
        let idx = 2 * j;
        if idx == 7 {
            continue;
        }
        let absc = half * XGK[idx];
        let f1 = f(center - absc);
        let f2 = f(center + absc);
        fv1[idx] = f1;
        fv2[idx] = f2;
        let fsum = f1 + f2;
        res_kronrod += WGK[idx] * fsum;
        res_abs += WGK[idx] * (f1.abs() + f2.abs());
    }

    let res_kh = res_kronrod * 0.5;
    let mut res_asc = WGK[7] * (f_center - res_kh).abs();
    for idx in 0..7 {
        res_asc += WGK[idx] * ((fv1[idx] - res_kh).abs() + (fv2[idx] - res_kh).abs());
    }

    let value = res_kronrod * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_kronrod - res_gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    rel_tol: f64,
    abs_tol: f64,
    collect_cells: bool,
) -> Result<(QuadratureResult, Vec<Cell>)> {
    let mut heap = BinaryHeap::new();
    let (v, e) = gk15(f, lo, hi);
    let mut evaluations = 15;
    heap.push(Segment {
        lo,
        hi,
        value: v,
        error: e,
    });
    let mut total_value = v;
    let mut total_error = e;

    while total_error > abs_tol.max(rel_tol * total_value.abs()) {
        if heap.len() >= MAX_SEGMENTS {
            return Err(Error::Accuracy {
                message: format!(
                    "quadrature did not converge after {MAX_SEGMENTS} subdivisions \
                     (error estimate {total_error:.3e})"
                ),
                best: total_value,
            });
        }
        let worst = heap.pop().expect("heap nonempty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(worst.lo < mid && mid < worst.hi) {
            // Interval no longer splittable in floating point; accept as is.
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(f, worst.lo, mid);
        let (v2, e2) = gk15(f, mid, worst.hi);
        evaluations += 30;
        total_value += v1 + v2 - worst.value;
        total_error += e1 + e2 - worst.error;
        heap.push(Segment {
            lo: worst.lo,
            hi: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            lo: mid,
            hi: worst.hi,
            value: v2,
            error: e2,
        });
    }

    if !total_value.is_finite() {
        return Err(Error::Accuracy {
            message: "quadrature produced a non-finite value".into(),
            best: total_value,
        });
    }

    let cells = if collect_cells {
        let mut cells: Vec<Cell> = heap
            .into_iter()
            .map(|s| Cell {
                lo: s.lo,
                hi: s.hi,
                value: s.value,
            })
            .collect();
        cells.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        cells
    } else {
        Vec::new()
    };

    Ok((
        QuadratureResult {
            value: total_value,
            abs_error_estimate: total_error,
            evaluations,
        },
        cells,
    ))
}

/// Integrate `f` over `domain` to the requested tolerances. Semi-infinite and
/// doubly infinite domains are handled via a change of variables.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    domain: Interval,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<QuadratureResult> {
    if !(rel_tol > 0.0) && !(abs_tol > 0.0) {
        return Err(Error::domain(
            "integrate: at least one of rel_tol, abs_tol must be positive",
        ));
    }
    let (a, b) = (domain.lo(), domain.hi());
    // Map semi-infinite pieces onto [0, 1) via x = a + t/(1-t).
    let upper_tail = |f: &dyn Fn(f64) -> f64, from: f64| {
        let g = |t: f64| {
            let w = 1.0 - t;
            if w <= 0.0 {
                return 0.0;
            }
            let fx = f(from + t / w);
            if fx == 0.0 {
                0.0
            } else {
                fx / (w * w)
            }
        };
        adaptive(&g, 0.0, 1.0, rel_tol, abs_tol, false).map(|(r, _)| r)
    };
    let lower_tail = |f: &dyn Fn(f64) -> f64, upto: f64| {
        let g = |t: f64| {
            let w = 1.0 - t;
            if w <= 0.0 {
                return 0.0;
            }
            let fx = f(upto - t / w);
            if fx == 0.0 {
                0.0
            } else {
                fx / (w * w)
            }
        };
        adaptive(&g, 0.0, 1.0, rel_tol, abs_tol, false).map(|(r, _)| r)
    };
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adaptive(&f, a, b, rel_tol, abs_tol, false).map(|(r, _)| r),
        (true, false) => upper_tail(&f, a),
        (false, true) => lower_tail(&f, b),
        (false, false) => {
            let left = lower_tail(&f, 0.0)?;
            let right = upper_tail(&f, 0.0)?;
            Ok(QuadratureResult {
                value: left.value + right.value,
                abs_error_estimate: left.abs_error_estimate + right.abs_error_estimate,
                evaluations: left.evaluations + right.evaluations,
            })
        }
    }
}

/// Integrate `f` over the finite interval `[lo, hi]` and also return the
/// final subdivision, sorted by position. The cells form a partition of the
/// domain and carry per-cell integral values, which makes them a convenient
/// backbone for cached CDF evaluation.
pub fn integrate_cells<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<(QuadratureResult, Vec<Cell>)> {
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::domain(format!(
            "integrate_cells: need a finite interval with lo < hi, got [{lo}, {hi}]"
        )));
    }
    adaptive(&f, lo, hi, rel_tol, abs_tol, true)
}

/// One non-adaptive Gauss-Kronrod pass; used for cheap local refinements on
/// cells that a previous adaptive run already resolved.
pub(crate) fn gk15_cell<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    gk15(f, a, b).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::normal_pdf;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomial_on_unit_interval() {
        let r = integrate(|x| x * x, Interval::new(0.0, 1.0).unwrap(), 1e-12, 0.0).unwrap();
        assert_abs_diff_eq!(r.value, 1.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn exponential_tail() {
        let r = integrate(
            |x| (-x).exp(),
            Interval::new(0.0, f64::INFINITY).unwrap(),
            1e-10,
            0.0,
        )
        .unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn normal_density_normalizes() {
        let r = integrate(
            |x| normal_pdf(x, 0.0, 1.0),
            Interval::new(f64::NEG_INFINITY, f64::INFINITY).unwrap(),
            1e-10,
            0.0,
        )
        .unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-8);
        assert!(r.abs_error_estimate < 1e-8);
    }

    #[test]
    fn integrable_singularity() {
        // 1/sqrt(x) on (0, 1] integrates to 2.
        let r = integrate(
            |x| if x > 0.0 { x.powf(-0.5) } else { 0.0 },
            Interval::new(0.0, 1.0).unwrap(),
            1e-8,
            0.0,
        )
        .unwrap();
        assert_abs_diff_eq!(r.value, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn cells_partition_domain() {
        let (r, cells) = integrate_cells(|x| (-x * x).exp(), 0.0, 5.0, 1e-12, 0.0).unwrap();
        assert!(!cells.is_empty());
        assert_eq!(cells.first().unwrap().lo, 0.0);
        assert_eq!(cells.last().unwrap().hi, 5.0);
        for pair in cells.windows(2) {
            assert_eq!(pair[0].hi, pair[1].lo);
        }
        let sum: f64 = cells.iter().map(|c| c.value).sum();
        assert_abs_diff_eq!(sum, r.value, epsilon = 1e-12);
        assert_abs_diff_eq!(r.value, 0.886226925452758, epsilon = 1e-10); // sqrt(pi)/2
    }
}
