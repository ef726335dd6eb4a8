//! Prior distributions for the effect and the heterogeneity.
//!
//! The effect prior is either an improper uniform over the real line or a
//! normal distribution. The heterogeneity prior catalogue covers four rough
//! classes:
//!
//! * proper informative: half-normal, half-Student-t, half-Cauchy,
//!   exponential, log-normal, Lomax;
//! * proper "non-informative", scaled by the standard errors: uniform
//!   shrinkage, DuMouchel, conventional;
//! * improper, standard-error dependent: Jeffreys (Tibshirani), Berger-Deely;
//! * improper, scale-invariant: the power family `p(tau) ∝ tau^a`
//!   (`a = 0` uniform, `a = -1/2` uniform in `sqrt(tau)`).
//!
//! Proper priors expose a density/CDF/quantile/sampler bundle; improper ones
//! expose only the (unnormalized) density plus propriety metadata — all
//! normalization happens at the posterior level, where impropriety of the
//! result is checked and reported.

mod turner;

pub use turner::TurnerTable;

use crate::error::{Error, Result};
use crate::numerics::{
    self, integrate, normal_cdf, normal_pdf, normal_quantile, student_t_cdf, student_t_quantile,
    Interval, RngStream,
};

/// Prior for the effect parameter: improper uniform over the real line, or
/// normal with the given mean and standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub enum EffectPrior {
    Uniform,
    Normal { mean: f64, sd: f64 },
}

impl EffectPrior {
    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() || !(sd > 0.0) || !sd.is_finite() {
            return Err(Error::domain(format!(
                "normal effect prior needs finite mean and sd > 0, got ({mean}, {sd})"
            )));
        }
        Ok(EffectPrior::Normal { mean, sd })
    }

    pub fn is_proper(&self) -> bool {
        matches!(self, EffectPrior::Normal { .. })
    }
}

/// Standard errors of the studies at hand together with `s0`, the square
/// root of the harmonic mean of the squared standard errors:
/// `s0^2 = k / sum(1/sigma_i^2)`. This is the scale anchor of the uniform
/// shrinkage and DuMouchel priors.
#[derive(Clone, Debug)]
pub struct StandardErrorContext {
    sigmas: Vec<f64>,
    s0: f64,
}

impl StandardErrorContext {
    pub fn new(sigmas: Vec<f64>) -> Result<Self> {
        if sigmas.is_empty() {
            return Err(Error::domain(
                "standard error context needs at least one sigma",
            ));
        }
        if sigmas.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::domain(
                "standard errors must be positive and finite",
            ));
        }
        let k = sigmas.len() as f64;
        let s0 = (k / sigmas.iter().map(|s| s.powi(-2)).sum::<f64>()).sqrt();
        Ok(StandardErrorContext { sigmas, s0 })
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }
}

#[derive(Clone, Debug)]
enum Family {
    HalfNormal { scale: f64 },
    HalfCauchy { scale: f64 },
    HalfStudentT { scale: f64, df: f64 },
    Exponential { rate: f64 },
    LogNormal { meanlog: f64, sdlog: f64 },
    Lomax { scale: f64, shape: f64 },
    UniformShrinkage { s0: f64 },
    DuMouchel { s0: f64 },
    Conventional { sigmas: Vec<f64>, log_norm: f64 },
    Jeffreys { sigmas: Vec<f64> },
    BergerDeely { sigmas: Vec<f64> },
    Power { exponent: f64 },
}

/// A prior over the heterogeneity `tau >= 0`, bundling density, propriety
/// metadata and (for proper families) CDF, quantile and sampler.
#[derive(Clone, Debug)]
pub struct HeterogeneityPrior {
    family: Family,
}

fn require_positive(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::domain(format!(
            "{what} must be positive and finite, got {value}"
        )))
    }
}

impl HeterogeneityPrior {
    /// Half-normal prior with the given scale: `p(tau) = 2 N(tau; 0, scale^2)`.
    pub fn half_normal(scale: f64) -> Result<Self> {
        Ok(Self {
            family: Family::HalfNormal {
                scale: require_positive(scale, "half-normal scale")?,
            },
        })
    }

    pub fn half_cauchy(scale: f64) -> Result<Self> {
        Ok(Self {
            family: Family::HalfCauchy {
                scale: require_positive(scale, "half-Cauchy scale")?,
            },
        })
    }

    /// Folded Student-t, scaled.
    pub fn half_student_t(scale: f64, df: f64) -> Result<Self> {
        Ok(Self {
            family: Family::HalfStudentT {
                scale: require_positive(scale, "half-Student-t scale")?,
                df: require_positive(df, "half-Student-t df")?,
            },
        })
    }

    /// Exponential prior; the maximum entropy choice for a pre-specified
    /// prior mean `1/rate`.
    pub fn exponential(rate: f64) -> Result<Self> {
        Ok(Self {
            family: Family::Exponential {
                rate: require_positive(rate, "exponential rate")?,
            },
        })
    }

    pub fn log_normal(meanlog: f64, sdlog: f64) -> Result<Self> {
        if !meanlog.is_finite() {
            return Err(Error::domain("log-normal meanlog must be finite"));
        }
        Ok(Self {
            family: Family::LogNormal {
                meanlog,
                sdlog: require_positive(sdlog, "log-normal sdlog")?,
            },
        })
    }

    /// Lomax (Pareto type II): heavy-tailed exponential variant.
    pub fn lomax(scale: f64, shape: f64) -> Result<Self> {
        Ok(Self {
            family: Family::Lomax {
                scale: require_positive(scale, "Lomax scale")?,
                shape: require_positive(shape, "Lomax shape")?,
            },
        })
    }

    /// Uniform shrinkage prior: a uniform prior on the average shrinkage
    /// `S(tau) = s0^2/(s0^2 + tau^2)`, giving
    /// `p(tau) = 2 tau s0^2 / (s0^2 + tau^2)^2` with median `s0`.
    pub fn uniform_shrinkage(ctx: &StandardErrorContext) -> Result<Self> {
        Ok(Self {
            family: Family::UniformShrinkage { s0: ctx.s0() },
        })
    }

    /// DuMouchel prior `p(tau) = s0 / (s0 + tau)^2` (log-logistic, mode 0,
    /// median s0).
    pub fn dumouchel(ctx: &StandardErrorContext) -> Result<Self> {
        Ok(Self {
            family: Family::DuMouchel { s0: ctx.s0() },
        })
    }

    /// Proper variation of the Jeffreys prior:
    /// `p(tau) ∝ prod_i (tau / (sigma_i^2 + tau^2)^{3/2})^{1/k}`,
    /// normalized numerically at construction.
    pub fn conventional(ctx: &StandardErrorContext) -> Result<Self> {
        let sigmas = ctx.sigmas().to_vec();
        let dens = {
            let sigmas = sigmas.clone();
            move |tau: f64| conventional_unnorm(&sigmas, tau)
        };
        let norm = integrate(dens, Interval::new(0.0, f64::INFINITY)?, 1e-8, 0.0)?;
        Ok(Self {
            family: Family::Conventional {
                sigmas,
                log_norm: norm.value.ln(),
            },
        })
    }

    /// Tibshirani's variation of the Jeffreys prior, conditioning on the
    /// location parameter:
    /// `p(tau) ∝ sqrt(sum_i (tau/(sigma_i^2 + tau^2))^2)`. Improper (right
    /// tail like 1/tau) but locally integrable with `p(0) = 0`.
    pub fn jeffreys(ctx: &StandardErrorContext) -> Result<Self> {
        Ok(Self {
            family: Family::Jeffreys {
                sigmas: ctx.sigmas().to_vec(),
            },
        })
    }

    /// Berger-Deely prior `p(tau) ∝ prod_i (tau/(sigma_i^2 + tau^2))^{1/k}`;
    /// equals the Jeffreys prior when all standard errors coincide.
    pub fn berger_deely(ctx: &StandardErrorContext) -> Result<Self> {
        Ok(Self {
            family: Family::BergerDeely {
                sigmas: ctx.sigmas().to_vec(),
            },
        })
    }

    /// Improper power family `p(tau) ∝ tau^a`. `a = 0` is the uniform prior,
    /// `a = -1/2` the uniform prior in `sqrt(tau)`, `a = -1` the (never
    /// integrable here) log-uniform prior.
    pub fn power(exponent: f64) -> Self {
        Self {
            family: Family::Power { exponent },
        }
    }

    /// Uniform prior on `tau` (shorthand for `power(0)`).
    pub fn uniform() -> Self {
        Self::power(0.0)
    }

    /// Empirically derived log-normal prior from the built-in lookup table,
    /// keyed by outcome type and comparator pair.
    pub fn turner(outcome: &str, comparator1: &str, comparator2: &str) -> Result<Self> {
        TurnerTable::builtin().prior(outcome, comparator1, comparator2)
    }

    /// Density at `tau` (zero for negative arguments). Unnormalized for
    /// improper families.
    pub fn density(&self, tau: f64) -> f64 {
        if tau < 0.0 {
            return 0.0;
        }
        match &self.family {
            Family::HalfNormal { scale } => 2.0 * normal_pdf(tau, 0.0, *scale),
            Family::HalfCauchy { scale } => {
                2.0 / (std::f64::consts::PI * scale * (1.0 + (tau / scale).powi(2)))
            }
            Family::HalfStudentT { scale, df } => {
                2.0 / scale * student_t_pdf(tau / scale, *df)
            }
            Family::Exponential { rate } => rate * (-rate * tau).exp(),
            Family::LogNormal { meanlog, sdlog } => {
                if tau == 0.0 {
                    0.0
                } else {
                    normal_pdf(tau.ln(), *meanlog, *sdlog) / tau
                }
            }
            Family::Lomax { scale, shape } => {
                shape / scale * (1.0 + tau / scale).powf(-shape - 1.0)
            }
            Family::UniformShrinkage { s0 } => {
                let s02 = s0 * s0;
                2.0 * tau * s02 / (s02 + tau * tau).powi(2)
            }
            Family::DuMouchel { s0 } => s0 / (s0 + tau).powi(2),
            Family::Conventional { sigmas, log_norm } => {
                conventional_unnorm(sigmas, tau) * (-log_norm).exp()
            }
            Family::Jeffreys { sigmas } => sigmas
                .iter()
                .map(|s| (tau / (s * s + tau * tau)).powi(2))
                .sum::<f64>()
                .sqrt(),
            Family::BergerDeely { sigmas } => {
                if tau == 0.0 {
                    0.0
                } else {
                    let k = sigmas.len() as f64;
                    let log_sum: f64 = sigmas
                        .iter()
                        .map(|s| tau.ln() - (s * s + tau * tau).ln())
                        .sum();
                    (log_sum / k).exp()
                }
            }
            Family::Power { exponent } => {
                if *exponent == 0.0 {
                    1.0
                } else {
                    tau.powf(*exponent)
                }
            }
        }
    }

    /// Natural log of [`Self::density`]; `-inf` where the density vanishes.
    pub fn log_density(&self, tau: f64) -> f64 {
        if tau < 0.0 {
            return f64::NEG_INFINITY;
        }
        match &self.family {
            Family::HalfNormal { scale } => {
                2.0_f64.ln() + numerics::normal_log_pdf(tau, 0.0, *scale)
            }
            Family::Exponential { rate } => rate.ln() - rate * tau,
            Family::LogNormal { meanlog, sdlog } => {
                if tau == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    numerics::normal_log_pdf(tau.ln(), *meanlog, *sdlog) - tau.ln()
                }
            }
            Family::Lomax { scale, shape } => {
                (shape / scale).ln() - (shape + 1.0) * (1.0 + tau / scale).ln()
            }
            Family::Power { exponent } => exponent * tau.ln(),
            Family::BergerDeely { sigmas } => {
                if tau == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    let k = sigmas.len() as f64;
                    sigmas
                        .iter()
                        .map(|s| tau.ln() - (s * s + tau * tau).ln())
                        .sum::<f64>()
                        / k
                }
            }
            Family::Conventional { sigmas, log_norm } => {
                if tau == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    let k = sigmas.len() as f64;
                    tau.ln()
                        - 1.5
                            * sigmas
                                .iter()
                                .map(|s| (s * s + tau * tau).ln())
                                .sum::<f64>()
                            / k
                        - log_norm
                }
            }
            _ => self.density(tau).ln(),
        }
    }

    /// Whether the prior integrates to one.
    pub fn is_proper(&self) -> bool {
        !matches!(
            self.family,
            Family::Jeffreys { .. } | Family::BergerDeely { .. } | Family::Power { .. }
        )
    }

    /// CDF of a proper prior. Improper priors have none.
    pub fn cdf(&self, tau: f64) -> Result<f64> {
        if tau <= 0.0 {
            return Ok(0.0);
        }
        match &self.family {
            Family::HalfNormal { scale } => Ok(2.0 * normal_cdf(tau, 0.0, *scale) - 1.0),
            Family::HalfCauchy { scale } => {
                Ok(2.0 / std::f64::consts::PI * (tau / scale).atan())
            }
            Family::HalfStudentT { scale, df } => {
                Ok(2.0 * student_t_cdf(tau / scale, *df) - 1.0)
            }
            Family::Exponential { rate } => Ok(-(-rate * tau).exp_m1()),
            Family::LogNormal { meanlog, sdlog } => Ok(normal_cdf(tau.ln(), *meanlog, *sdlog)),
            Family::Lomax { scale, shape } => Ok(1.0 - (1.0 + tau / scale).powf(-shape)),
            Family::UniformShrinkage { s0 } => {
                let t2 = tau * tau;
                Ok(t2 / (s0 * s0 + t2))
            }
            Family::DuMouchel { s0 } => Ok(tau / (s0 + tau)),
            Family::Conventional { .. } => {
                let dens = |t: f64| self.density(t);
                Ok(integrate(dens, Interval::new(0.0, tau)?, 1e-10, 1e-12)?
                    .value
                    .clamp(0.0, 1.0))
            }
            _ => Err(Error::capability(format!(
                "{} prior is improper: no CDF",
                self.name()
            ))),
        }
    }

    /// Quantile function of a proper prior.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!(
                "prior quantile: p must lie in (0, 1), got {p}"
            )));
        }
        match &self.family {
            Family::HalfNormal { scale } => Ok(normal_quantile(0.5 * (p + 1.0), 0.0, *scale)),
            Family::HalfCauchy { scale } => {
                Ok(scale * (std::f64::consts::PI * p / 2.0).tan())
            }
            Family::HalfStudentT { scale, df } => {
                Ok(scale * student_t_quantile(0.5 * (p + 1.0), *df))
            }
            Family::Exponential { rate } => Ok(-(-p).ln_1p() / rate),
            Family::LogNormal { meanlog, sdlog } => {
                Ok(normal_quantile(p, *meanlog, *sdlog).exp())
            }
            Family::Lomax { scale, shape } => Ok(scale * ((1.0 - p).powf(-1.0 / shape) - 1.0)),
            Family::UniformShrinkage { s0 } => Ok(s0 * (p / (1.0 - p)).sqrt()),
            Family::DuMouchel { s0 } => Ok(s0 * p / (1.0 - p)),
            Family::Conventional { .. } => {
                // Invert the numerical CDF by bracketed root search.
                let mut hi = 1.0;
                while self.cdf(hi)? < p && hi < 1e12 {
                    hi *= 2.0;
                }
                numerics::find_root(
                    |t| self.cdf(t).unwrap_or(f64::NAN) - p,
                    Interval::new(0.0, hi)?,
                    1e-12 * hi.max(1.0),
                )
            }
            _ => Err(Error::capability(format!(
                "{} prior is improper: no quantile function",
                self.name()
            ))),
        }
    }

    /// Draw from a proper prior by inverse CDF.
    pub fn sample(&self, rng: &mut RngStream) -> Result<f64> {
        self.quantile(rng.uniform())
    }

    /// Minimum number of studies required for a proper posterior, per the
    /// propriety rules of the prior classes. `None` means the posterior is
    /// never proper (log-uniform and heavier).
    pub fn min_studies(&self, proper_effect_prior: bool) -> Option<usize> {
        match &self.family {
            Family::Jeffreys { .. } | Family::BergerDeely { .. } => {
                Some(if proper_effect_prior { 1 } else { 2 })
            }
            Family::Power { exponent } => {
                if *exponent <= -1.0 {
                    return None;
                }
                // Tail decay: marginal likelihood falls off like tau^-(k-1)
                // under the uniform effect prior and tau^-k under a proper
                // one. Integrability needs k > a + 2 (resp. k > a + 1).
                let bound = exponent + if proper_effect_prior { 1.0 } else { 2.0 };
                let k_min = (bound.floor() as i64 + 1).max(1);
                Some(k_min as usize)
            }
            _ => Some(1),
        }
    }

    /// Short human-readable name used in error messages and reports.
    pub fn name(&self) -> String {
        match &self.family {
            Family::HalfNormal { scale } => format!("half-normal({scale})"),
            Family::HalfCauchy { scale } => format!("half-Cauchy({scale})"),
            Family::HalfStudentT { scale, df } => format!("half-Student-t({scale}, df={df})"),
            Family::Exponential { rate } => format!("exponential(rate={rate})"),
            Family::LogNormal { meanlog, sdlog } => {
                format!("log-normal({meanlog:.6}, {sdlog:.6})")
            }
            Family::Lomax { scale, shape } => format!("Lomax({scale}, shape={shape})"),
            Family::UniformShrinkage { .. } => "uniform shrinkage".into(),
            Family::DuMouchel { .. } => "DuMouchel".into(),
            Family::Conventional { .. } => "conventional".into(),
            Family::Jeffreys { .. } => "Jeffreys".into(),
            Family::BergerDeely { .. } => "Berger-Deely".into(),
            Family::Power { exponent } => {
                if *exponent == 0.0 {
                    "uniform".into()
                } else {
                    format!("power(tau^{exponent})")
                }
            }
        }
    }
}

fn conventional_unnorm(sigmas: &[f64], tau: f64) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    let k = sigmas.len() as f64;
    let log_val: f64 = sigmas
        .iter()
        .map(|s| tau.ln() - 1.5 * (s * s + tau * tau).ln())
        .sum::<f64>()
        / k;
    log_val.exp()
}

fn student_t_pdf(x: f64, df: f64) -> f64 {
    let half = 0.5 * (df + 1.0);
    (numerics::ln_gamma(half)
        - numerics::ln_gamma(0.5 * df)
        - 0.5 * (df * std::f64::consts::PI).ln()
        - half * (1.0 + x * x / df).ln())
    .exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn check_proper(prior: &HeterogeneityPrior) {
        // density integrates to one
        let total = integrate(
            |t| prior.density(t),
            Interval::new(0.0, f64::INFINITY).unwrap(),
            1e-9,
            0.0,
        )
        .unwrap();
        assert_abs_diff_eq!(total.value, 1.0, epsilon = 1e-6);
        // quantile inverts the cdf
        for p in [0.01, 0.1, 0.5, 0.9, 0.99] {
            let q = prior.quantile(p).unwrap();
            assert_abs_diff_eq!(prior.cdf(q).unwrap(), p, epsilon = 1e-6);
        }
    }

    #[test]
    fn proper_families_are_proper() {
        let ctx = StandardErrorContext::new(vec![0.6, 0.56, 0.88, 0.46, 0.64, 1.53]).unwrap();
        for prior in [
            HeterogeneityPrior::half_normal(0.5).unwrap(),
            HeterogeneityPrior::half_cauchy(0.5).unwrap(),
            HeterogeneityPrior::half_student_t(0.5, 4.0).unwrap(),
            HeterogeneityPrior::exponential(2.0).unwrap(),
            HeterogeneityPrior::log_normal(-1.07, 0.87).unwrap(),
            HeterogeneityPrior::lomax(0.5, 2.0).unwrap(),
            HeterogeneityPrior::uniform_shrinkage(&ctx).unwrap(),
            HeterogeneityPrior::dumouchel(&ctx).unwrap(),
            HeterogeneityPrior::conventional(&ctx).unwrap(),
        ] {
            check_proper(&prior);
        }
    }

    #[test]
    fn half_normal_confines_heterogeneity() {
        // scale 0.5 puts 95% of the mass below 0.98
        let hn = HeterogeneityPrior::half_normal(0.5).unwrap();
        assert_abs_diff_eq!(hn.cdf(0.98).unwrap(), 0.95, epsilon = 5e-3);
        assert_abs_diff_eq!(hn.density(0.0), 1.5957691, epsilon = 1e-6);
    }

    #[test]
    fn exponential_mean() {
        let e = HeterogeneityPrior::exponential(2.0).unwrap();
        let mean = integrate(
            |t| t * e.density(t),
            Interval::new(0.0, f64::INFINITY).unwrap(),
            1e-10,
            0.0,
        )
        .unwrap();
        assert_abs_diff_eq!(mean.value, 0.5, epsilon = 1e-8);
    }

    #[test]
    fn shrinkage_style_priors_anchor_at_s0() {
        let ctx = StandardErrorContext::new(vec![0.3, 0.6, 1.1]).unwrap();
        let s0 = ctx.s0();
        let us = HeterogeneityPrior::uniform_shrinkage(&ctx).unwrap();
        let dm = HeterogeneityPrior::dumouchel(&ctx).unwrap();
        assert_abs_diff_eq!(us.quantile(0.5).unwrap(), s0, epsilon = 1e-12);
        assert_abs_diff_eq!(dm.quantile(0.5).unwrap(), s0, epsilon = 1e-12);
        assert_eq!(us.density(0.0), 0.0);
        assert_abs_diff_eq!(dm.density(0.0), 1.0 / s0, epsilon = 1e-12);
        assert_abs_diff_eq!(dm.cdf(s0).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn jeffreys_mode_at_common_sigma() {
        let sigma = 0.7;
        let ctx = StandardErrorContext::new(vec![sigma; 4]).unwrap();
        let j = HeterogeneityPrior::jeffreys(&ctx).unwrap();
        assert_eq!(j.density(0.0), 0.0);
        let (x, _) = numerics::minimize_scalar(
            |t| -j.density(t),
            Interval::new(0.01, 5.0).unwrap(),
            1e-10,
        )
        .unwrap();
        assert_abs_diff_eq!(x, sigma, epsilon = 1e-6);
    }

    #[test]
    fn berger_deely_equals_jeffreys_for_equal_sigmas() {
        let ctx = StandardErrorContext::new(vec![0.4; 5]).unwrap();
        let j = HeterogeneityPrior::jeffreys(&ctx).unwrap();
        let bd = HeterogeneityPrior::berger_deely(&ctx).unwrap();
        // proportional: ratio constant over tau
        let r0 = j.density(0.3) / bd.density(0.3);
        for t in [0.05, 0.7, 1.9, 6.0] {
            assert_abs_diff_eq!(j.density(t) / bd.density(t), r0, epsilon = 1e-10);
        }
    }

    #[test]
    fn power_family_metadata() {
        let uniform = HeterogeneityPrior::power(0.0);
        assert_eq!(uniform.density(0.7), 1.0);
        assert_eq!(uniform.min_studies(false), Some(3));
        assert_eq!(uniform.min_studies(true), Some(2));

        let sqrt = HeterogeneityPrior::power(-0.5);
        assert!(sqrt.density(1e-300) > 1e100); // pole at the origin
        assert_eq!(sqrt.min_studies(false), Some(2));

        let tau_sq = HeterogeneityPrior::power(1.0);
        assert_eq!(tau_sq.min_studies(false), Some(4));

        let log_uniform = HeterogeneityPrior::power(-1.0);
        assert_eq!(log_uniform.min_studies(false), None);
        assert_eq!(log_uniform.min_studies(true), None);
    }

    #[test]
    fn improper_priors_have_no_cdf() {
        let ctx = StandardErrorContext::new(vec![0.5, 0.9]).unwrap();
        for prior in [
            HeterogeneityPrior::jeffreys(&ctx).unwrap(),
            HeterogeneityPrior::berger_deely(&ctx).unwrap(),
            HeterogeneityPrior::power(0.0),
        ] {
            assert!(!prior.is_proper());
            assert!(matches!(prior.cdf(1.0), Err(Error::Capability(_))));
            assert!(matches!(prior.quantile(0.5), Err(Error::Capability(_))));
            let mut rng = RngStream::new(1);
            assert!(prior.sample(&mut rng).is_err());
        }
    }

    #[test]
    fn scale_invariance_classes() {
        // sigma-scaling priors: p_{c sigma}(c tau) * c = p_sigma(tau)
        let sigmas = vec![0.3, 0.8, 1.4];
        let c = 2.7;
        let scaled: Vec<f64> = sigmas.iter().map(|s| c * s).collect();
        let ctx = StandardErrorContext::new(sigmas).unwrap();
        let ctx_c = StandardErrorContext::new(scaled).unwrap();
        let pairs: Vec<(HeterogeneityPrior, HeterogeneityPrior)> = vec![
            (
                HeterogeneityPrior::uniform_shrinkage(&ctx).unwrap(),
                HeterogeneityPrior::uniform_shrinkage(&ctx_c).unwrap(),
            ),
            (
                HeterogeneityPrior::dumouchel(&ctx).unwrap(),
                HeterogeneityPrior::dumouchel(&ctx_c).unwrap(),
            ),
            (
                HeterogeneityPrior::conventional(&ctx).unwrap(),
                HeterogeneityPrior::conventional(&ctx_c).unwrap(),
            ),
        ];
        for (base, scaled) in &pairs {
            for t in [0.1, 0.5, 1.2, 3.0] {
                assert_abs_diff_eq!(
                    scaled.density(c * t) * c,
                    base.density(t),
                    epsilon = 1e-9
                );
            }
        }
        // improper sigma-scaling families: proportional after scaling
        let j = HeterogeneityPrior::jeffreys(&ctx).unwrap();
        let jc = HeterogeneityPrior::jeffreys(&ctx_c).unwrap();
        let ratio = jc.density(c * 0.5) * c / j.density(0.5);
        for t in [0.1, 1.2, 3.0] {
            assert_abs_diff_eq!(jc.density(c * t) * c / j.density(t), ratio, epsilon = 1e-9);
        }
        // power family: (1/s) p(tau/s) proportional to p(tau)
        let p = HeterogeneityPrior::power(-0.5);
        let s = 3.3;
        let r = p.density(0.4 / s) / s / p.density(0.4);
        for t in [0.1, 0.9, 2.5] {
            assert_abs_diff_eq!(p.density(t / s) / s / p.density(t), r, epsilon = 1e-10);
        }
    }

    #[test]
    fn sampler_matches_cdf() {
        let prior = HeterogeneityPrior::half_normal(0.5).unwrap();
        let mut rng = RngStream::new(11);
        let n = 10_000;
        let mut draws: Vec<f64> = (0..n).map(|_| prior.sample(&mut rng).unwrap()).collect();
        draws.sort_by(f64::total_cmp);
        // Kolmogorov distance between empirical and analytic CDF
        let mut d: f64 = 0.0;
        for (i, x) in draws.iter().enumerate() {
            let f = prior.cdf(*x).unwrap();
            let hi = (i + 1) as f64 / n as f64;
            let lo = i as f64 / n as f64;
            d = d.max((f - hi).abs()).max((f - lo).abs());
        }
        assert!(d < 0.02, "Kolmogorov distance {d}");
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        /// Quantile inverts the CDF across random parameters and levels for
        /// the closed-form proper families.
        #[test]
        fn quantile_cdf_round_trip(
            scale in 0.05f64..5.0,
            rate in 0.2f64..5.0,
            shape in 0.5f64..4.0,
            p in 0.01f64..0.99,
        ) {
            for prior in [
                HeterogeneityPrior::half_normal(scale).unwrap(),
                HeterogeneityPrior::half_cauchy(scale).unwrap(),
                HeterogeneityPrior::exponential(rate).unwrap(),
                HeterogeneityPrior::lomax(scale, shape).unwrap(),
                HeterogeneityPrior::log_normal(scale.ln(), shape).unwrap(),
            ] {
                let q = prior.quantile(p).unwrap();
                let back = prior.cdf(q).unwrap();
                proptest::prop_assert!((back - p).abs() < 1e-6, "{}: {} vs {}", prior.name(), back, p);
            }
        }

        /// The uniform shrinkage and DuMouchel medians sit at s0 for any
        /// standard error vector.
        #[test]
        fn s0_anchoring(sigmas in proptest::collection::vec(0.05f64..3.0, 1..8)) {
            let ctx = StandardErrorContext::new(sigmas).unwrap();
            let us = HeterogeneityPrior::uniform_shrinkage(&ctx).unwrap();
            let dm = HeterogeneityPrior::dumouchel(&ctx).unwrap();
            proptest::prop_assert!((us.quantile(0.5).unwrap() - ctx.s0()).abs() < 1e-12);
            proptest::prop_assert!((dm.quantile(0.5).unwrap() - ctx.s0()).abs() < 1e-12);
        }
    }

    #[test]
    fn nonpositive_parameters_are_rejected() {
        assert!(HeterogeneityPrior::half_normal(0.0).is_err());
        assert!(HeterogeneityPrior::exponential(-1.0).is_err());
        assert!(HeterogeneityPrior::lomax(1.0, f64::NAN).is_err());
        assert!(StandardErrorContext::new(vec![]).is_err());
        assert!(StandardErrorContext::new(vec![0.5, -0.1]).is_err());
    }
}
