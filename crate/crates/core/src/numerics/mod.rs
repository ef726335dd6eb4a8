//! Self-contained numerical substrate: normal distribution functions,
//! adaptive quadrature, bracketed root finding and scalar optimization, and a
//! seedable, splittable random number stream.
//!
//! Everything here is pure; only [`RngStream`] carries state, and each stream
//! is meant to be confined to one logical task (fan out via
//! [`RngStream::substream`]).

mod normal;
mod quad;
mod rng;
mod roots;
mod special;

pub use normal::{normal_cdf, normal_log_pdf, normal_pdf, normal_quantile};
pub(crate) use normal::{std_normal_cdf, std_normal_quantile, std_normal_sf};
pub use quad::{integrate, integrate_cells, Cell, QuadratureResult};
pub(crate) use quad::gk15_cell;
pub use rng::RngStream;
pub use roots::{find_root, minimize_scalar};
pub use special::{ln_gamma, regularized_inc_beta, student_t_cdf, student_t_quantile};

use crate::error::{Error, Result};

/// A closed interval `[lo, hi]`. Endpoints may be infinite, which flags a
/// semi-infinite (or doubly infinite) integration domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::domain(format!(
                "invalid interval [{lo}, {hi}]: require lo <= hi and no NaN"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}
