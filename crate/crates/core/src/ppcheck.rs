//! Posterior predictive checks via Monte Carlo replication.
//!
//! Parameters are drawn from the posterior restricted to a null hypothesis,
//! replicated data sets are generated from them through the two model
//! stages, and a discrepancy statistic is computed on each replicate; the
//! p-value is the fraction of replicated statistics at least as extreme as
//! the observed one.
//!
//! Replicates are embarrassingly parallel; each one runs on its own indexed
//! RNG substream, so results are seed-deterministic regardless of worker
//! count.

use rayon::prelude::*;

use crate::analysis::{build_core, AnalysisResult, Target};
use crate::error::{Error, Result};
use crate::model::{conditional_moments, Dataset};
use crate::numerics::{integrate_cells, std_normal_quantile, std_normal_sf, Cell, RngStream};

/// Which parameter a hypothesis constrains.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HypothesisParameter {
    Mu,
    Tau,
    /// A study-specific true effect, by index.
    Theta(usize),
}

/// Direction of the alternative; the null is its complement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Alternative {
    Less,
    Greater,
}

/// A one-sided parametric null hypothesis. With `alternative = Less` the
/// null region is `[value, inf)`, with `Greater` it is `(-inf, value]`
/// (intersected with `[0, inf)` for the heterogeneity).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hypothesis {
    pub parameter: HypothesisParameter,
    pub null_value: f64,
    pub alternative: Alternative,
}

impl Hypothesis {
    pub fn new(parameter: HypothesisParameter, null_value: f64, alternative: Alternative) -> Self {
        Hypothesis {
            parameter,
            null_value,
            alternative,
        }
    }

    /// Resolve a study label into a theta hypothesis.
    pub fn theta_labeled(
        data: &Dataset,
        label: &str,
        null_value: f64,
        alternative: Alternative,
    ) -> Result<Self> {
        let index = data.index_of_label(label).ok_or_else(|| {
            Error::Lookup(format!(
                "no study labeled '{label}'; available: {}",
                data.labels().collect::<Vec<_>>().join(", ")
            ))
        })?;
        Ok(Hypothesis::new(
            HypothesisParameter::Theta(index),
            null_value,
            alternative,
        ))
    }
}

/// Discrepancy statistic computed on each replicated data set.
pub enum Statistic<'a> {
    /// Posterior CDF of the hypothesis parameter at the null value, under a
    /// full re-analysis of the replicate with the original configuration.
    PosteriorCdf,
    /// Cochran's Q.
    CochranQ,
    /// A user-supplied function of the replicated estimates and the standard
    /// errors. The rejection tail must be given explicitly.
    User(&'a (dyn Fn(&[f64], &[f64]) -> f64 + Sync)),
}

/// Which tail of the replicated statistic distribution counts as evidence
/// against the null.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RejectionTail {
    Upper,
    Lower,
    /// Resolve from the statistic and alternative; user statistics must be
    /// explicit.
    Auto,
}

/// Stored per-replicate draws and statistics.
#[derive(Clone, Debug, Default)]
pub struct Replicates {
    pub tau: Vec<f64>,
    pub mu: Vec<f64>,
    /// One row per replicate, `k` entries each.
    pub theta: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub statistic: Vec<f64>,
    pub tail_flag: Vec<bool>,
}

/// Result of a posterior predictive check.
#[derive(Clone, Debug)]
pub struct PpResult {
    pub p_value: f64,
    pub observed_statistic: f64,
    pub replicates: Replicates,
    /// Requested number of replications.
    pub n: usize,
    /// Replicates dropped because the statistic failed; the p-value is the
    /// tail fraction among the survivors.
    pub failures: usize,
    pub seed: u64,
}

/// Cochran's Q statistic:
/// `Q = sum_i w_i (y_i - mu_hat)^2` with `w_i = 1/sigma_i^2` and `mu_hat`
/// the fixed-effect (inverse-variance weighted) mean. Under `tau = 0` it
/// follows a chi-squared distribution with `k - 1` degrees of freedom.
pub fn cochran_q(data: &Dataset) -> Result<f64> {
    if data.k() < 2 {
        return Err(Error::domain("Cochran's Q needs at least two studies"));
    }
    let fe = conditional_moments(data, &crate::priors::EffectPrior::Uniform, 0.0);
    Ok(data
        .estimates()
        .iter()
        .map(|e| {
            let r = e.y - fe.mean;
            r * r / (e.sigma * e.sigma)
        })
        .sum())
}

fn cochran_q_values(ys: &[f64], sigmas: &[f64]) -> f64 {
    let wsum: f64 = sigmas.iter().map(|s| 1.0 / (s * s)).sum();
    let mean: f64 = ys
        .iter()
        .zip(sigmas)
        .map(|(y, s)| y / (s * s))
        .sum::<f64>()
        / wsum;
    ys.iter()
        .zip(sigmas)
        .map(|(y, s)| {
            let r = y - mean;
            r * r / (s * s)
        })
        .sum()
}

/// How null-constrained parameter draws are generated.
enum NullSampler {
    /// Rejection sampling of joint draws against the mu region.
    MuRejection { lo: f64, hi: f64 },
    /// tau from the region-mass-reweighted marginal, mu from the truncated
    /// normal conditional; used when the null region mass is below 1%.
    MuWeighted {
        cells: Vec<Cell>,
        cum: Vec<f64>,
        total: f64,
        upper: f64,
        lo: f64,
        hi: f64,
    },
    /// tau restricted to an interval of its marginal (point mass at zero if
    /// the region is {0}).
    TauRegion { cdf_lo: f64, cdf_hi: f64 },
    TauPoint,
    /// tau and mu unrestricted, theta_index drawn from its truncated
    /// conditional.
    Theta { index: usize, lo: f64, hi: f64 },
}

/// Draw from a standard normal truncated to `[lo, hi]` (either side may be
/// infinite), stably in the far tails via the survival function.
fn truncated_normal(mean: f64, sd: f64, lo: f64, hi: f64, rng: &mut RngStream) -> f64 {
    let u = rng.uniform();
    if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
        return mean + sd * rng.standard_normal();
    }
    if hi == f64::INFINITY {
        // P(Z > a) = sf(a); z = -quantile(sf(a) * (1 - u))
        let a = (lo - mean) / sd;
        let tail = std_normal_sf(a);
        let p = (tail * (1.0 - u)).max(f64::MIN_POSITIVE);
        return mean - sd * std_normal_quantile(p.min(1.0 - f64::EPSILON));
    }
    if lo == f64::NEG_INFINITY {
        let b = (hi - mean) / sd;
        let tail = std_normal_sf(-b); // P(Z < b)
        let p = (tail * (1.0 - u)).max(f64::MIN_POSITIVE);
        return mean + sd * std_normal_quantile(p.min(1.0 - f64::EPSILON));
    }
    // Doubly truncated: interpolate on the CDF scale.
    let a = (lo - mean) / sd;
    let b = (hi - mean) / sd;
    let fa = crate::numerics::std_normal_cdf(a);
    let fb = crate::numerics::std_normal_cdf(b);
    let p = (fa + u * (fb - fa)).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
    mean + sd * std_normal_quantile(p)
}

/// Posterior predictive p-value by Monte Carlo replication.
///
/// `n` replicates are drawn from the posterior conditional on the null
/// hypothesis, new data are generated through the hierarchical model, and
/// `statistic` is evaluated on each replicate. `progress`, when given, is
/// called after every additional percent of replicates completes.
pub fn ppp_value(
    result: &AnalysisResult,
    hypothesis: &Hypothesis,
    statistic: Statistic<'_>,
    rejection_tail: RejectionTail,
    n: usize,
    seed: u64,
    progress: Option<&(dyn Fn(usize) + Sync)>,
) -> Result<PpResult> {
    if n == 0 {
        return Err(Error::domain("ppp_value needs at least one replication"));
    }
    if let HypothesisParameter::Theta(i) = hypothesis.parameter {
        if i >= result.data().k() {
            return Err(Error::domain(format!(
                "theta index {i} out of range for k = {}",
                result.data().k()
            )));
        }
    }

    let tail = match (&statistic, rejection_tail) {
        (_, RejectionTail::Upper) => RejectionTail::Upper,
        (_, RejectionTail::Lower) => RejectionTail::Lower,
        (Statistic::PosteriorCdf, RejectionTail::Auto) => match hypothesis.alternative {
            Alternative::Less => RejectionTail::Upper,
            Alternative::Greater => RejectionTail::Lower,
        },
        (Statistic::CochranQ, RejectionTail::Auto) => RejectionTail::Upper,
        (Statistic::User(_), RejectionTail::Auto) => {
            return Err(Error::domain(
                "user statistics need an explicit rejection tail",
            ))
        }
    };

    let observed = match &statistic {
        Statistic::PosteriorCdf => {
            result.cdf(target_of(hypothesis.parameter), hypothesis.null_value)
        }
        Statistic::CochranQ => cochran_q(result.data())?,
        Statistic::User(f) => {
            let ys: Vec<f64> = result.data().ys().collect();
            let sigmas: Vec<f64> = result.data().sigmas().collect();
            f(&ys, &sigmas)
        }
    };

    let sampler = build_null_sampler(result, hypothesis)?;
    let sigmas: Vec<f64> = result.data().sigmas().collect();
    let labels: Vec<String> = result.data().labels().map(str::to_string).collect();
    let base = RngStream::new(seed);

    let progress_step = (n / 100).max(1);
    let counter = std::sync::atomic::AtomicUsize::new(0);

    let rows: Vec<Option<(f64, f64, Vec<f64>, Vec<f64>, f64)>> = (0..n)
        .into_par_iter()
        .map(|rep| {
            let mut rng = base.substream(rep as u64);
            let (tau, mu, theta) = draw_null_parameters(result, &sampler, &mut rng);
            let ys: Vec<f64> = theta
                .iter()
                .zip(&sigmas)
                .map(|(&t, &s)| rng.normal(t, s))
                .collect();
            let stat = match &statistic {
                Statistic::PosteriorCdf => replicate_cdf_statistic(
                    result,
                    hypothesis.parameter,
                    hypothesis.null_value,
                    &ys,
                    &sigmas,
                    &labels,
                ),
                Statistic::CochranQ => Some(cochran_q_values(&ys, &sigmas)),
                Statistic::User(f) => {
                    let v = f(&ys, &sigmas);
                    v.is_finite().then_some(v)
                }
            };
            if let Some(cb) = progress {
                let done = counter.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
                if done % progress_step == 0 {
                    cb(done);
                }
            }
            stat.map(|s| (tau, mu, theta, ys, s))
        })
        .collect();

    let mut replicates = Replicates::default();
    let mut failures = 0usize;
    for row in rows {
        match row {
            Some((tau, mu, theta, ys, stat)) => {
                let flag = match tail {
                    RejectionTail::Upper => stat >= observed,
                    RejectionTail::Lower => stat <= observed,
                    RejectionTail::Auto => unreachable!("tail resolved above"),
                };
                replicates.tau.push(tau);
                replicates.mu.push(mu);
                replicates.theta.push(theta);
                replicates.y.push(ys);
                replicates.statistic.push(stat);
                replicates.tail_flag.push(flag);
            }
            None => failures += 1,
        }
    }
    if failures * 20 > n {
        return Err(Error::Accuracy {
            message: format!("{failures} of {n} replicates failed (more than 5%)"),
            best: f64::NAN,
        });
    }
    let kept = replicates.tail_flag.len();
    let p_value = replicates.tail_flag.iter().filter(|&&f| f).count() as f64 / kept.max(1) as f64;

    Ok(PpResult {
        p_value,
        observed_statistic: observed,
        replicates,
        n,
        failures,
        seed,
    })
}

fn target_of(parameter: HypothesisParameter) -> Target {
    match parameter {
        HypothesisParameter::Mu => Target::Mu,
        HypothesisParameter::Tau => Target::Tau,
        HypothesisParameter::Theta(i) => Target::Shrinkage(i),
    }
}

/// Null region on the hypothesis parameter's scale.
fn null_region(hypothesis: &Hypothesis) -> (f64, f64) {
    match hypothesis.alternative {
        Alternative::Less => (hypothesis.null_value, f64::INFINITY),
        Alternative::Greater => (f64::NEG_INFINITY, hypothesis.null_value),
    }
}

fn build_null_sampler(result: &AnalysisResult, hypothesis: &Hypothesis) -> Result<NullSampler> {
    let (lo, hi) = null_region(hypothesis);
    match hypothesis.parameter {
        HypothesisParameter::Theta(index) => Ok(NullSampler::Theta { index, lo, hi }),
        HypothesisParameter::Tau => {
            let lo = lo.max(0.0);
            let hi_eff = hi.min(f64::INFINITY);
            if hi_eff <= 0.0 {
                // Null region collapses to the boundary point tau = 0.
                return Ok(NullSampler::TauPoint);
            }
            let cdf_lo = if lo > 0.0 {
                result.cdf(Target::Tau, lo)
            } else {
                0.0
            };
            let cdf_hi = if hi_eff.is_finite() {
                result.cdf(Target::Tau, hi_eff)
            } else {
                1.0
            };
            if cdf_hi <= cdf_lo {
                return Ok(NullSampler::TauPoint);
            }
            Ok(NullSampler::TauRegion { cdf_lo, cdf_hi })
        }
        HypothesisParameter::Mu => {
            let mass = result.cdf(Target::Mu, hi.min(1e308))
                - if lo.is_finite() {
                    result.cdf(Target::Mu, lo)
                } else {
                    0.0
                };
            if mass >= 0.01 {
                return Ok(NullSampler::MuRejection { lo, hi });
            }
            // Reweight the tau marginal by the conditional null-region mass
            // and sample it by inverse CDF; mu then comes from the analytic
            // truncated conditional.
            let marginal = result.tau_marginal();
            let upper = marginal.upper_bound();
            let region_mass = |tau: f64| {
                let cond = result.cond_moment(tau);
                let upper_mass = if hi.is_finite() {
                    1.0 - std_normal_sf((hi - cond.mean) / cond.sd)
                } else {
                    1.0
                };
                let lower_mass = if lo.is_finite() {
                    1.0 - std_normal_sf((lo - cond.mean) / cond.sd)
                } else {
                    0.0
                };
                (upper_mass - lower_mass).max(0.0)
            };
            let g = |tau: f64| marginal.density(tau) * region_mass(tau);
            let (total_res, cells) = integrate_cells(g, 0.0, upper, 1e-9, 1e-300)?;
            if !(total_res.value > 0.0) {
                return Err(Error::domain(
                    "null hypothesis region has numerically zero posterior mass",
                ));
            }
            let mut cum = Vec::with_capacity(cells.len() + 1);
            let mut acc = 0.0;
            cum.push(0.0);
            for c in &cells {
                acc += c.value;
                cum.push(acc);
            }
            Ok(NullSampler::MuWeighted {
                cells,
                cum,
                total: total_res.value,
                upper,
                lo,
                hi,
            })
        }
    }
}

/// Draw `(tau, mu, theta_1..k)` from the posterior conditional on the null.
fn draw_null_parameters(
    result: &AnalysisResult,
    sampler: &NullSampler,
    rng: &mut RngStream,
) -> (f64, f64, Vec<f64>) {
    let k = result.data().k();
    let (tau, mu, constrained): (f64, f64, Option<(usize, f64)>) = match sampler {
        NullSampler::MuRejection { lo, hi } => loop {
            let tau = result.tau_marginal().sample(rng);
            let cond = result.cond_moment(tau);
            let mu = rng.normal(cond.mean, cond.sd);
            if mu >= *lo && mu <= *hi {
                break (tau, mu, None);
            }
        },
        NullSampler::MuWeighted {
            cells,
            cum,
            total,
            upper,
            lo,
            hi,
        } => {
            let target = rng.uniform() * total;
            let idx = match cum.binary_search_by(|c| c.total_cmp(&target)) {
                Ok(i) => i.min(cells.len() - 1),
                Err(i) => (i.max(1) - 1).min(cells.len() - 1),
            };
            // Piecewise-linear inversion inside the quadrature cell; cells
            // are narrow wherever the reweighted density has structure.
            let cell = &cells[idx];
            let frac = if cell.value > 0.0 {
                ((target - cum[idx]) / cell.value).clamp(0.0, 1.0)
            } else {
                0.5
            };
            let tau = (cell.lo + frac * (cell.hi - cell.lo)).min(*upper);
            let cond = result.cond_moment(tau);
            let mu = truncated_normal(cond.mean, cond.sd, *lo, *hi, rng);
            (tau, mu, None)
        }
        NullSampler::TauPoint => {
            let cond = result.cond_moment(0.0);
            (0.0, rng.normal(cond.mean, cond.sd), None)
        }
        NullSampler::TauRegion { cdf_lo, cdf_hi } => {
            let p = (cdf_lo + rng.uniform() * (cdf_hi - cdf_lo))
                .clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
            let tau = result.tau_marginal().quantile(p);
            let cond = result.cond_moment(tau);
            (tau, rng.normal(cond.mean, cond.sd), None)
        }
        NullSampler::Theta { index, lo, hi } => {
            let tau = result.tau_marginal().sample(rng);
            let cond = result.cond_moment(tau);
            let mu = rng.normal(cond.mean, cond.sd);
            // theta_index | mu, tau, y_index: normal with precision-weighted
            // mean, truncated to the null region.
            let e = &result.data().estimates()[*index];
            let (m, sd) = if tau > 0.0 {
                let s2 = e.sigma * e.sigma;
                let t2 = tau * tau;
                let den = s2 + t2;
                ((t2 * e.y + s2 * mu) / den, (s2 * t2 / den).sqrt())
            } else {
                (mu, 0.0)
            };
            let theta_i = if sd > 0.0 {
                truncated_normal(m, sd, *lo, *hi, rng)
            } else {
                m.clamp(*lo, *hi)
            };
            (tau, mu, Some((*index, theta_i)))
        }
    };

    let theta: Vec<f64> = (0..k)
        .map(|j| {
            if let Some((i, v)) = constrained {
                if i == j {
                    return v;
                }
            }
            if tau > 0.0 {
                rng.normal(mu, tau)
            } else {
                mu
            }
        })
        .collect();
    (tau, mu, theta)
}

/// Re-analyze a replicate with the original configuration and evaluate the
/// posterior CDF of the hypothesis parameter at the null value.
fn replicate_cdf_statistic(
    result: &AnalysisResult,
    parameter: HypothesisParameter,
    null_value: f64,
    ys: &[f64],
    sigmas: &[f64],
    labels: &[String],
) -> Option<f64> {
    let estimates: Vec<crate::effects::EffectEstimate> = ys
        .iter()
        .zip(sigmas)
        .zip(labels)
        .map(|((&y, &s), label)| crate::effects::EffectEstimate::new(label.clone(), y, s))
        .collect::<Result<Vec<_>>>()
        .ok()?;
    let data = Dataset::new(estimates).ok()?;
    let core = build_core(&data, result.config()).ok()?;
    let value = match parameter {
        HypothesisParameter::Mu => core.mixtures.effect.cdf(null_value),
        HypothesisParameter::Tau => core.marginal.cdf(null_value),
        HypothesisParameter::Theta(i) => core.mixtures.shrinkage[i].cdf(null_value),
    };
    value.is_finite().then_some(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{run_analysis, AnalysisConfig};
    use crate::priors::{EffectPrior, HeterogeneityPrior};
    use approx::assert_abs_diff_eq;

    fn randomized_pair() -> Dataset {
        // The two randomized studies of the transplantation example.
        use crate::effects::{escalc, ContingencyTable, EffectMeasure};
        let tables = [
            ("Heffron (2003)", 14u64, 61u64, 15u64, 20u64),
            ("Spada (2006)", 4, 36, 11, 36),
        ];
        Dataset::new(
            tables
                .iter()
                .map(|&(l, et, nt, ec, nc)| {
                    escalc(
                        &ContingencyTable::from_totals(l, et, nt, ec, nc).unwrap(),
                        EffectMeasure::log_or(),
                    )
                    .unwrap()
                })
                .collect(),
        )
        .unwrap()
    }

    fn pair_config() -> AnalysisConfig {
        AnalysisConfig::new(
            EffectPrior::normal(0.0, 4.0).unwrap(),
            HeterogeneityPrior::half_normal(0.5).unwrap(),
        )
    }

    #[test]
    fn cochran_q_basics() {
        let equal = Dataset::from_values(&[0.7, 0.7], &[0.3, 0.5]).unwrap();
        assert_abs_diff_eq!(cochran_q(&equal).unwrap(), 0.0, epsilon = 1e-12);
        let one = Dataset::from_values(&[0.7], &[0.3]).unwrap();
        assert!(cochran_q(&one).is_err());
        // quadratic scaling in the deviations
        let base = Dataset::from_values(&[0.2, -0.2, 0.5], &[0.3, 0.4, 0.5]).unwrap();
        let q1 = cochran_q(&base).unwrap();
        let ybar = {
            let wsum: f64 = base.sigmas().map(|s| 1.0 / (s * s)).sum();
            base.estimates()
                .iter()
                .map(|e| e.y / (e.sigma * e.sigma))
                .sum::<f64>()
                / wsum
        };
        let doubled = Dataset::from_values(
            &base
                .ys()
                .map(|y| ybar + 2.0 * (y - ybar))
                .collect::<Vec<_>>(),
            &base.sigmas().collect::<Vec<_>>(),
        )
        .unwrap();
        assert_abs_diff_eq!(cochran_q(&doubled).unwrap(), 4.0 * q1, epsilon = 1e-10);
    }

    #[test]
    fn observed_cdf_statistic_matches_reference() {
        let result = run_analysis(&randomized_pair(), &pair_config()).unwrap();
        assert_abs_diff_eq!(result.cdf(Target::Mu, 0.0), 0.9974968, epsilon = 1e-3);
    }

    #[test]
    fn q_test_p_value_in_band() {
        let result = run_analysis(&randomized_pair(), &pair_config()).unwrap();
        let hyp = Hypothesis::new(HypothesisParameter::Tau, 0.0, Alternative::Greater);
        let pp = ppp_value(
            &result,
            &hyp,
            Statistic::CochranQ,
            RejectionTail::Auto,
            1000,
            7001,
            None,
        )
        .unwrap();
        assert!(
            pp.p_value > 0.20 && pp.p_value < 0.29,
            "Q-test p = {}",
            pp.p_value
        );
        assert_eq!(pp.replicates.statistic.len(), 1000);
        // Replicated Q under tau = 0 follows chi-squared with one degree of
        // freedom: compare via its closed-form CDF.
        let mut qs = pp.replicates.statistic.clone();
        qs.sort_by(f64::total_cmp);
        let chi2_cdf_1 = |x: f64| {
            2.0 * crate::numerics::normal_cdf(x.sqrt(), 0.0, 1.0) - 1.0
        };
        let n = qs.len();
        let mut d: f64 = 0.0;
        for (i, q) in qs.iter().enumerate() {
            let f = chi2_cdf_1(*q);
            d = d
                .max((f - (i + 1) as f64 / n as f64).abs())
                .max((f - i as f64 / n as f64).abs());
        }
        assert!(d < 0.05, "replicated Q vs chi2(1): KS distance {d}");
    }

    #[test]
    fn seed_determinism_and_binomial_stability() {
        let result = run_analysis(&randomized_pair(), &pair_config()).unwrap();
        let hyp = Hypothesis::new(HypothesisParameter::Tau, 0.0, Alternative::Greater);
        let p1 = ppp_value(&result, &hyp, Statistic::CochranQ, RejectionTail::Auto, 4000, 1, None)
            .unwrap();
        let p1_again =
            ppp_value(&result, &hyp, Statistic::CochranQ, RejectionTail::Auto, 4000, 1, None)
                .unwrap();
        assert_eq!(p1.p_value, p1_again.p_value);
        assert_eq!(p1.replicates.statistic, p1_again.replicates.statistic);
        let p2 = ppp_value(&result, &hyp, Statistic::CochranQ, RejectionTail::Auto, 4000, 2, None)
            .unwrap();
        let p = 0.5 * (p1.p_value + p2.p_value);
        let band = 3.0 * (p * (1.0 - p) / 4000.0).sqrt() * std::f64::consts::SQRT_2;
        assert!(
            (p1.p_value - p2.p_value).abs() < band,
            "seeds disagree beyond binomial noise: {} vs {}",
            p1.p_value,
            p2.p_value
        );
    }

    #[test]
    fn tail_flags_are_bookkept() {
        let result = run_analysis(&randomized_pair(), &pair_config()).unwrap();
        let hyp = Hypothesis::new(HypothesisParameter::Tau, 0.0, Alternative::Greater);
        let pp = ppp_value(
            &result,
            &hyp,
            Statistic::CochranQ,
            RejectionTail::Auto,
            500,
            3,
            None,
        )
        .unwrap();
        for (s, f) in pp.replicates.statistic.iter().zip(&pp.replicates.tail_flag) {
            assert_eq!(*f, *s >= pp.observed_statistic);
        }
        assert_abs_diff_eq!(
            pp.p_value,
            pp.replicates.tail_flag.iter().filter(|&&f| f).count() as f64 / 500.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn mu_hypothesis_uses_truncated_sampler() {
        let result = run_analysis(&randomized_pair(), &pair_config()).unwrap();
        // Null mass P(mu >= 0 | y) = 1 - 0.9975 = 0.0025 < 1%: weighted path.
        let hyp = Hypothesis::new(HypothesisParameter::Mu, 0.0, Alternative::Less);
        let pp = ppp_value(
            &result,
            &hyp,
            Statistic::CochranQ, // cheap statistic; we only probe the sampler here
            RejectionTail::Upper,
            400,
            11,
            None,
        )
        .unwrap();
        assert!(pp.replicates.mu.iter().all(|&m| m >= 0.0));
        // theta draws follow N(mu, tau^2) around their mu
        assert_eq!(pp.replicates.theta.len(), 400);
    }

    #[test]
    fn user_statistic_requires_explicit_tail() {
        let result = run_analysis(&randomized_pair(), &pair_config()).unwrap();
        let hyp = Hypothesis::new(HypothesisParameter::Tau, 0.0, Alternative::Greater);
        let f = |ys: &[f64], _sigmas: &[f64]| ys.iter().sum::<f64>();
        let err = ppp_value(
            &result,
            &hyp,
            Statistic::User(&f),
            RejectionTail::Auto,
            10,
            1,
            None,
        );
        assert!(err.is_err());
    }

    #[test]
    fn label_resolution() {
        let data = randomized_pair();
        let hyp = Hypothesis::theta_labeled(&data, "Spada (2006)", 0.0, Alternative::Less).unwrap();
        assert_eq!(hyp.parameter, HypothesisParameter::Theta(1));
        assert!(Hypothesis::theta_labeled(&data, "nope", 0.0, Alternative::Less).is_err());
    }
}
