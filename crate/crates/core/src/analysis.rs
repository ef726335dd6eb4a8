//! The user-facing meta-analysis: runs the model and mixture machinery and
//! exposes summaries, marginal accessors, credible intervals, prediction,
//! shrinkage, ML/MAP estimates, Bayes factors and the REML bridge.

use crate::error::{Error, Result};
use crate::mixture::{posterior_mixtures, DirectConfig, NormalMixture, PosteriorMixtures};
use crate::model::{
    conditional_moments, log_likelihood, log_marginal_likelihood, shrinkage_moments, tau_marginal,
    ConditionalMoments, Dataset, TauMarginal,
};
use crate::numerics::{
    integrate, minimize_scalar, normal_log_pdf, normal_pdf, Interval, RngStream,
};
use crate::priors::{EffectPrior, HeterogeneityPrior};

/// Credible interval flavour: shortest (highest-density for unimodal
/// posteriors) or central (equal tail probabilities).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntervalKind {
    Shortest,
    Central,
}

/// A posterior credible interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CredibleInterval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub kind: IntervalKind,
}

/// Which marginal posterior a query refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    /// The overall effect.
    Mu,
    /// The heterogeneity.
    Tau,
    /// A future study's true effect.
    Predictive,
    /// A study-specific true effect, by index.
    Shrinkage(usize),
}

/// Configuration of one analysis run.
#[derive(Clone, Debug)]
pub struct AnalysisConfig {
    pub effect_prior: EffectPrior,
    pub heterogeneity_prior: HeterogeneityPrior,
    pub direct: DirectConfig,
    pub interval_type: IntervalKind,
}

impl AnalysisConfig {
    pub fn new(effect_prior: EffectPrior, heterogeneity_prior: HeterogeneityPrior) -> Self {
        AnalysisConfig {
            effect_prior,
            heterogeneity_prior,
            direct: DirectConfig::default(),
            interval_type: IntervalKind::Shortest,
        }
    }

    pub fn with_direct(mut self, direct: DirectConfig) -> Self {
        self.direct = direct;
        self
    }

    pub fn with_interval_type(mut self, kind: IntervalKind) -> Self {
        self.interval_type = kind;
        self
    }
}

/// Mode/median/mean/sd and the 95% interval of one marginal posterior.
#[derive(Clone, Copy, Debug)]
pub struct ParameterSummary {
    pub mode: f64,
    pub median: f64,
    pub mean: f64,
    pub sd: f64,
    pub interval: CredibleInterval,
}

/// The summary table: heterogeneity, effect, prediction, and one column per
/// study-specific (shrinkage) estimate.
#[derive(Clone, Debug)]
pub struct Summary {
    pub tau: ParameterSummary,
    pub mu: ParameterSummary,
    pub predictive: ParameterSummary,
    pub shrinkage: Vec<ParameterSummary>,
}

/// A point in the `(tau, mu)` plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauMu {
    pub tau: f64,
    pub mu: f64,
}

/// Maximum likelihood and maximum a posteriori estimates, both joint and
/// marginal.
#[derive(Clone, Copy, Debug)]
pub struct ModeEstimates {
    pub ml_joint: TauMu,
    pub ml_marginal: TauMu,
    pub map_joint: TauMu,
    pub map_marginal: TauMu,
}

/// Bayes factors of the point null hypotheses, defined as
/// `p(y | null) / p(y)` with the remaining parameter marginalized under its
/// prior on both sides. Requires proper priors.
#[derive(Clone, Copy, Debug)]
pub struct BayesFactors {
    pub tau_zero: f64,
    pub mu_zero: f64,
}

/// Everything a finished analysis knows. Immutable; safe to share across
/// threads for concurrent reads.
#[derive(Clone, Debug)]
pub struct AnalysisResult {
    data: Dataset,
    config: AnalysisConfig,
    tau_marginal: TauMarginal,
    mixtures: PosteriorMixtures,
    summary: Summary,
    estimates: ModeEstimates,
    bayes_factors: Option<BayesFactors>,
    log_evidence: Option<f64>,
}

/// Posterior bundles without the summary/estimate extras; the workhorse for
/// replicated re-analyses in posterior predictive checks and calibration.
#[derive(Clone, Debug)]
pub(crate) struct PosteriorCore {
    pub marginal: TauMarginal,
    pub mixtures: PosteriorMixtures,
}

pub(crate) fn build_core(data: &Dataset, config: &AnalysisConfig) -> Result<PosteriorCore> {
    let marginal = tau_marginal(data, &config.effect_prior, &config.heterogeneity_prior)?;
    let mixtures = posterior_mixtures(&marginal, &config.direct)?;
    Ok(PosteriorCore { marginal, mixtures })
}

/// Run the full analysis: posterior bundles, summary table, ML/MAP block and
/// (for proper priors) Bayes factors and the model evidence.
pub fn run_analysis(data: &Dataset, config: &AnalysisConfig) -> Result<AnalysisResult> {
    let core = build_core(data, config)?;
    let PosteriorCore { marginal, mixtures } = core;

    let level = 0.95;
    let kind = config.interval_type;

    let tau_summary = ParameterSummary {
        mode: marginal.mode(),
        median: marginal.quantile(0.5),
        mean: marginal.mean(),
        sd: marginal.sd(),
        interval: tau_interval(&marginal, level, kind),
    };
    let mu_summary = mixture_summary(&mixtures.effect, level, kind);
    let predictive_summary = mixture_summary(&mixtures.predictive, level, kind);
    let shrinkage_summary: Vec<ParameterSummary> = mixtures
        .shrinkage
        .iter()
        .map(|m| mixture_summary(m, level, kind))
        .collect();

    let estimates = mode_estimates(data, config, &marginal, mu_summary.mode)?;

    let both_proper =
        config.effect_prior.is_proper() && config.heterogeneity_prior.is_proper();
    let log_evidence = both_proper.then(|| marginal.log_normalization());
    let bayes_factors = if both_proper {
        Some(compute_bayes_factors(data, config, &marginal)?)
    } else {
        None
    };

    Ok(AnalysisResult {
        data: data.clone(),
        config: config.clone(),
        tau_marginal: marginal,
        mixtures,
        summary: Summary {
            tau: tau_summary,
            mu: mu_summary,
            predictive: predictive_summary,
            shrinkage: shrinkage_summary,
        },
        estimates,
        bayes_factors,
        log_evidence,
    })
}

/// Restricted maximum likelihood estimate of the heterogeneity: the argmax
/// over `tau` of the marginal likelihood under the uniform effect prior.
/// Ties at the lower boundary resolve to zero.
pub fn reml_tau(data: &Dataset) -> Result<f64> {
    if data.k() < 2 {
        return Err(Error::domain(
            "the REML heterogeneity estimate needs at least two studies",
        ));
    }
    let objective = |tau: f64| log_marginal_likelihood(data, &EffectPrior::Uniform, tau);
    let (tau, value) = maximize_scan(&objective, data.tau_scale(), 400)?;
    if objective(0.0) >= value - 1e-12 * value.abs() {
        return Ok(0.0);
    }
    Ok(tau)
}

/// Scan a grid on `[0, upper]`, then refine the best point by golden
/// section. Returns `(argmax, max)`.
fn maximize_scan(f: &dyn Fn(f64) -> f64, upper: f64, n_scan: usize) -> Result<(f64, f64)> {
    let mut best_x = 0.0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..=n_scan {
        let x = upper * i as f64 / n_scan as f64;
        let v = f(x);
        if v == f64::INFINITY {
            return Ok((x, v));
        }
        if v > best_v {
            best_v = v;
            best_x = x;
        }
    }
    if !best_v.is_finite() {
        return Err(Error::domain(
            "objective is nowhere finite on the scan bracket",
        ));
    }
    let step = upper / n_scan as f64;
    let (x, neg_v) = minimize_scalar(
        |x| -f(x),
        Interval::new((best_x - step).max(0.0), (best_x + step).min(upper))?,
        1e-10,
    )?;
    if -neg_v >= best_v {
        Ok((x, -neg_v))
    } else {
        Ok((best_x, best_v))
    }
}

fn mode_estimates(
    data: &Dataset,
    config: &AnalysisConfig,
    marginal: &TauMarginal,
    mu_mode: f64,
) -> Result<ModeEstimates> {
    let tau_scale = data.tau_scale();

    // Joint ML: profile the likelihood over mu (the conditional estimate
    // under a uniform prior is the per-tau maximizer).
    let profile_ml = |tau: f64| {
        let m = conditional_moments(data, &EffectPrior::Uniform, tau);
        log_likelihood(data, m.mean, tau)
    };
    let (ml_tau, _) = maximize_scan(&profile_ml, tau_scale, 400)?;
    let ml_joint = TauMu {
        tau: ml_tau,
        mu: conditional_moments(data, &EffectPrior::Uniform, ml_tau).mean,
    };

    // Joint MAP: same profiling, with the priors multiplied in. For a normal
    // effect prior the per-tau maximizer is the conditional posterior mean.
    let profile_map = |tau: f64| {
        let m = conditional_moments(data, &config.effect_prior, tau);
        let prior_mu = match &config.effect_prior {
            EffectPrior::Uniform => 0.0,
            EffectPrior::Normal { mean, sd } => normal_log_pdf(m.mean, *mean, *sd),
        };
        log_likelihood(data, m.mean, tau)
            + prior_mu
            + config.heterogeneity_prior.log_density(tau)
    };
    let (map_tau, _) = maximize_scan(&profile_map, tau_scale, 400)?;
    let map_joint = TauMu {
        tau: map_tau,
        mu: conditional_moments(data, &config.effect_prior, map_tau).mean,
    };

    // Marginal ML of tau: maximizer of the marginal likelihood under the
    // configured effect prior. Marginal ML of mu: maximizer of the
    // likelihood with tau integrated out under its prior.
    let profile_marg = |tau: f64| log_marginal_likelihood(data, &config.effect_prior, tau);
    let (ml_marg_tau, _) = maximize_scan(&profile_marg, tau_scale, 400)?;
    let ml_marg_mu = marginal_mu_ml(data, config, marginal, ml_joint.mu)?;
    let ml_marginal = TauMu {
        tau: ml_marg_tau,
        mu: ml_marg_mu,
    };

    let map_marginal = TauMu {
        tau: marginal.mode(),
        mu: mu_mode,
    };

    Ok(ModeEstimates {
        ml_joint,
        ml_marginal,
        map_joint,
        map_marginal,
    })
}

/// Log of the tau-integrated likelihood at a fixed `mu`:
/// `log integral p(y | mu, tau) p(tau) dtau`.
fn tau_integrated_log_likelihood(
    data: &Dataset,
    heterogeneity_prior: &HeterogeneityPrior,
    upper: f64,
    mu: f64,
) -> Result<f64> {
    let g = |tau: f64| log_likelihood(data, mu, tau) + heterogeneity_prior.log_density(tau);
    let mut shift = f64::NEG_INFINITY;
    for i in 1..=64 {
        let v = g(upper * i as f64 / 64.0);
        if v.is_finite() && v > shift {
            shift = v;
        }
    }
    if !shift.is_finite() {
        return Err(Error::domain(
            "tau-integrated likelihood is degenerate at this mu",
        ));
    }
    let r = integrate(
        |tau| (g(tau) - shift).exp(),
        Interval::new(0.0, upper)?,
        1e-8,
        0.0,
    )?;
    Ok(shift + r.value.ln())
}

fn marginal_mu_ml(
    data: &Dataset,
    config: &AnalysisConfig,
    marginal: &TauMarginal,
    center: f64,
) -> Result<f64> {
    let upper = 2.0 * marginal.upper_bound();
    let spread = conditional_moments(data, &EffectPrior::Uniform, marginal.mode()).sd;
    let (mu, _) = minimize_scalar(
        |mu| {
            -tau_integrated_log_likelihood(data, &config.heterogeneity_prior, upper, mu)
                .unwrap_or(f64::NEG_INFINITY)
        },
        Interval::new(center - 6.0 * spread, center + 6.0 * spread)?,
        1e-9,
    )?;
    Ok(mu)
}

fn compute_bayes_factors(
    data: &Dataset,
    config: &AnalysisConfig,
    marginal: &TauMarginal,
) -> Result<BayesFactors> {
    let log_evidence = marginal.log_normalization();
    let log_p_tau0 = log_marginal_likelihood(data, &config.effect_prior, 0.0);
    let log_p_mu0 = tau_integrated_log_likelihood(
        data,
        &config.heterogeneity_prior,
        2.0 * marginal.upper_bound(),
        0.0,
    )?;
    Ok(BayesFactors {
        tau_zero: (log_p_tau0 - log_evidence).exp(),
        mu_zero: (log_p_mu0 - log_evidence).exp(),
    })
}

/// Mode of a mixture density: dense pre-scan over the component range, then
/// golden-section refinement. The pre-scan guards against multimodality.
fn mixture_mode(mixture: &NormalMixture) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in mixture.components() {
        lo = lo.min(c.mean - 4.0 * c.sd);
        hi = hi.max(c.mean + 4.0 * c.sd);
    }
    if lo >= hi {
        return 0.5 * (lo + hi);
    }
    let n = 512;
    let mut best_x = lo;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..=n {
        let x = lo + (hi - lo) * i as f64 / n as f64;
        let v = mixture.density(x);
        if v > best_v {
            best_v = v;
            best_x = x;
        }
    }
    let step = (hi - lo) / n as f64;
    minimize_scalar(
        |x| -mixture.density(x),
        Interval::new(best_x - step, best_x + step).expect("ordered bracket"),
        1e-10,
    )
    .map(|(x, _)| x)
    .unwrap_or(best_x)
}

fn mixture_summary(mixture: &NormalMixture, level: f64, kind: IntervalKind) -> ParameterSummary {
    let (mean, sd) = mixture.moments();
    ParameterSummary {
        mode: mixture_mode(mixture),
        median: mixture.quantile(0.5),
        mean,
        sd,
        interval: mixture_interval(mixture, level, kind),
    }
}

/// Shortest interval by golden-section search over the lower tail mass:
/// minimize `q(p + level) - q(p)` over `p`.
fn shortest_by_mass(
    quantile: &dyn Fn(f64) -> f64,
    level: f64,
) -> (f64, f64) {
    let eps = 1e-9_f64.min(0.5 * (1.0 - level));
    let (p, _) = minimize_scalar(
        |p| quantile(p + level) - quantile(p),
        Interval::new(eps, 1.0 - level - eps).expect("ordered bracket"),
        1e-9,
    )
    .expect("finite bracket");
    (quantile(p), quantile(p + level))
}

fn mixture_interval(mixture: &NormalMixture, level: f64, kind: IntervalKind) -> CredibleInterval {
    let (lo, hi) = match kind {
        IntervalKind::Central => (
            mixture.quantile(0.5 * (1.0 - level)),
            mixture.quantile(1.0 - 0.5 * (1.0 - level)),
        ),
        IntervalKind::Shortest => shortest_by_mass(&|p| mixture.quantile(p), level),
    };
    CredibleInterval {
        lo,
        hi,
        level,
        kind,
    }
}

fn tau_interval(marginal: &TauMarginal, level: f64, kind: IntervalKind) -> CredibleInterval {
    let (lo, hi) = match kind {
        IntervalKind::Central => (
            marginal.quantile(0.5 * (1.0 - level)),
            marginal.quantile(1.0 - 0.5 * (1.0 - level)),
        ),
        IntervalKind::Shortest => {
            // One-sided if the density at zero already exceeds the density at
            // the matched upper endpoint.
            let upper = marginal.quantile(level);
            if marginal.density(0.0) >= marginal.density(upper) {
                (0.0, upper)
            } else {
                shortest_by_mass(&|p| marginal.quantile(p), level)
            }
        }
    };
    CredibleInterval {
        lo,
        hi,
        level,
        kind,
    }
}

impl AnalysisResult {
    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn config(&self) -> &AnalysisConfig {
        &self.config
    }

    pub fn tau_marginal(&self) -> &TauMarginal {
        &self.tau_marginal
    }

    pub fn effect_mixture(&self) -> &NormalMixture {
        &self.mixtures.effect
    }

    pub fn predictive_mixture(&self) -> &NormalMixture {
        &self.mixtures.predictive
    }

    pub fn shrinkage_mixtures(&self) -> &[NormalMixture] {
        &self.mixtures.shrinkage
    }

    pub fn summary(&self) -> &Summary {
        &self.summary
    }

    pub fn estimates(&self) -> &ModeEstimates {
        &self.estimates
    }

    /// Log model evidence `log p(y)`; available when both priors are proper.
    pub fn log_evidence(&self) -> Option<f64> {
        self.log_evidence
    }

    fn mixture_for(&self, target: Target) -> &NormalMixture {
        match target {
            Target::Mu => &self.mixtures.effect,
            Target::Predictive => &self.mixtures.predictive,
            Target::Shrinkage(i) => {
                assert!(i < self.data.k(), "shrinkage index out of range");
                &self.mixtures.shrinkage[i]
            }
            Target::Tau => panic!("tau queries use the marginal bundle"),
        }
    }

    /// Marginal posterior density of a target.
    pub fn density(&self, target: Target, x: f64) -> f64 {
        match target {
            Target::Tau => self.tau_marginal.density(x),
            t => self.mixture_for(t).density(x),
        }
    }

    /// Joint posterior density over `(mu, tau)`: the exact normal
    /// conditional times the tau marginal (not mixture-based).
    pub fn joint_density(&self, mu: f64, tau: f64) -> f64 {
        if tau < 0.0 {
            return 0.0;
        }
        let cond = conditional_moments(&self.data, &self.config.effect_prior, tau);
        normal_pdf(mu, cond.mean, cond.sd) * self.tau_marginal.density(tau)
    }

    /// Marginal posterior CDF of a target.
    pub fn cdf(&self, target: Target, x: f64) -> f64 {
        match target {
            Target::Tau => self.tau_marginal.cdf(x),
            t => self.mixture_for(t).cdf(x),
        }
    }

    /// Marginal posterior quantile of a target.
    pub fn quantile(&self, target: Target, p: f64) -> f64 {
        match target {
            Target::Tau => self.tau_marginal.quantile(p),
            t => self.mixture_for(t).quantile(p),
        }
    }

    /// Credible interval at an arbitrary level and kind.
    pub fn credible_interval(&self, target: Target, level: f64, kind: IntervalKind) -> CredibleInterval {
        assert!(level > 0.0 && level < 1.0, "level must lie in (0, 1)");
        match target {
            Target::Tau => tau_interval(&self.tau_marginal, level, kind),
            t => mixture_interval(self.mixture_for(t), level, kind),
        }
    }

    /// Joint posterior draws `(tau, mu)`: `tau` by inverse CDF from its
    /// marginal, then `mu` from the normal conditional.
    pub fn sample_joint(&self, n: usize, rng: &mut RngStream) -> Vec<TauMu> {
        (0..n)
            .map(|_| {
                let tau = self.tau_marginal.sample(rng);
                let cond = conditional_moments(&self.data, &self.config.effect_prior, tau);
                TauMu {
                    tau,
                    mu: rng.normal(cond.mean, cond.sd),
                }
            })
            .collect()
    }

    /// Marginal draws of one target. For non-tau targets this samples the
    /// mixture directly, which is substantially cheaper than joint draws.
    pub fn sample(&self, target: Target, n: usize, rng: &mut RngStream) -> Vec<f64> {
        match target {
            Target::Tau => (0..n).map(|_| self.tau_marginal.sample(rng)).collect(),
            t => {
                let m = self.mixture_for(t);
                (0..n).map(|_| m.sample(rng)).collect()
            }
        }
    }

    /// Conditional posterior moments of the effect for a fixed `tau`, under
    /// the analysis' effect prior.
    pub fn cond_moment(&self, tau: f64) -> ConditionalMoments {
        conditional_moments(&self.data, &self.config.effect_prior, tau)
    }

    /// Conditional moments of study `index`'s true effect given `tau`.
    pub fn shrinkage_conditional(&self, index: usize, tau: f64) -> ConditionalMoments {
        shrinkage_moments(&self.data, &self.config.effect_prior, index, tau)
    }

    /// Bayes factor of a point null hypothesis. Errors when either prior is
    /// improper (the marginal likelihoods are not finite then).
    pub fn bayes_factor(&self, hypothesis: PointNull) -> Result<f64> {
        match &self.bayes_factors {
            Some(bf) => Ok(match hypothesis {
                PointNull::TauZero => bf.tau_zero,
                PointNull::MuZero => bf.mu_zero,
            }),
            None => Err(Error::capability(format!(
                "Bayes factors need proper priors; the analysis used {} with {}",
                match &self.config.effect_prior {
                    EffectPrior::Uniform => "an improper uniform effect prior".to_string(),
                    EffectPrior::Normal { .. } => "a normal effect prior".to_string(),
                },
                self.config.heterogeneity_prior.name()
            ))),
        }
    }

    pub fn bayes_factors(&self) -> Option<&BayesFactors> {
        self.bayes_factors.as_ref()
    }
}

/// The two point null hypotheses with built-in Bayes factors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointNull {
    TauZero,
    MuZero,
}
