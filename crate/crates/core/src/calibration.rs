//! Simulation-based self-check of the whole analysis chain.
//!
//! Parameters are drawn from their priors, data are generated through the
//! model, the data are analyzed with the matching priors, and the posterior
//! CDFs are evaluated at the true parameter values. If the machinery is
//! accurate these probability integral transform (PIT) values are uniform;
//! their empirical distribution also reads off the coverage of one-sided
//! credible limits at every level.

use rayon::prelude::*;

use crate::analysis::{build_core, AnalysisConfig};
use crate::error::{Error, Result};
use crate::mixture::DirectConfig;
use crate::model::Dataset;
use crate::numerics::{Interval, RngStream};
use crate::priors::{EffectPrior, HeterogeneityPrior};

/// A calibration scenario: proper priors for both parameters, the study
/// count choices, the standard error range, and the replication budget.
#[derive(Clone, Debug)]
pub struct CalibrationScenario {
    effect_prior: EffectPrior,
    heterogeneity_prior: HeterogeneityPrior,
    k_choices: Vec<usize>,
    sigma_range: Interval,
    pub n_sim: usize,
    pub seed: u64,
    pub direct: DirectConfig,
}

impl CalibrationScenario {
    pub fn new(
        effect_prior: EffectPrior,
        heterogeneity_prior: HeterogeneityPrior,
        k_choices: Vec<usize>,
        sigma_range: Interval,
        n_sim: usize,
        seed: u64,
    ) -> Result<Self> {
        if !effect_prior.is_proper() {
            return Err(Error::domain(
                "calibration needs a proper (normal) effect prior",
            ));
        }
        if !heterogeneity_prior.is_proper() {
            return Err(Error::domain(
                "calibration needs a proper heterogeneity prior",
            ));
        }
        if k_choices.is_empty() || k_choices.iter().any(|&k| k == 0) {
            return Err(Error::domain("k choices must be nonempty and positive"));
        }
        if !(sigma_range.lo() > 0.0) || !sigma_range.is_finite() {
            return Err(Error::domain(
                "sigma range must be positive and finite",
            ));
        }
        if n_sim == 0 {
            return Err(Error::domain("n_sim must be positive"));
        }
        Ok(CalibrationScenario {
            effect_prior,
            heterogeneity_prior,
            k_choices,
            sigma_range,
            n_sim,
            seed,
            direct: DirectConfig::default(),
        })
    }

    /// The scenario used for the standard self-check: unit information
    /// effect prior, half-normal(0.5) heterogeneity, k drawn from
    /// {2, 3, 5, 10, 20} and standard errors from [0.2, 1.0].
    pub fn standard(n_sim: usize, seed: u64) -> Self {
        CalibrationScenario::new(
            EffectPrior::normal(0.0, 4.0).expect("valid prior"),
            HeterogeneityPrior::half_normal(0.5).expect("valid prior"),
            vec![2, 3, 5, 10, 20],
            Interval::new(0.2, 1.0).expect("valid interval"),
            n_sim,
            seed,
        )
        .expect("standard scenario is valid")
    }
}

/// PIT values for effect and heterogeneity, one pair per successful
/// replicate.
#[derive(Clone, Debug)]
pub struct PitSample {
    pub pit_mu: Vec<f64>,
    pub pit_tau: Vec<f64>,
    pub failures: usize,
}

impl PitSample {
    /// A run is flagged when more than 1% of replicates failed to analyze.
    pub fn flagged(&self, n_sim: usize) -> bool {
        self.failures * 100 > n_sim
    }

    /// Empirical coverage of the one-sided credible limit at `level`: the
    /// fraction of PIT values at or below it.
    pub fn one_sided_coverage(pit: &[f64], level: f64) -> f64 {
        if pit.is_empty() {
            return f64::NAN;
        }
        pit.iter().filter(|&&p| p <= level).count() as f64 / pit.len() as f64
    }
}

/// Run the calibration scenario: per replicate, draw `mu` and `tau` from
/// their priors, `k` uniformly from the choices, standard errors uniformly
/// from the range, the estimates from the marginal model, then analyze with
/// the matching priors and record the posterior CDFs at the true values.
pub fn run_calibration(scenario: &CalibrationScenario) -> Result<PitSample> {
    let config = AnalysisConfig::new(
        scenario.effect_prior.clone(),
        scenario.heterogeneity_prior.clone(),
    )
    .with_direct(scenario.direct);
    let base = RngStream::new(scenario.seed);

    let rows: Vec<Option<(f64, f64)>> = (0..scenario.n_sim)
        .into_par_iter()
        .map(|rep| {
            let mut rng = base.substream(rep as u64);
            let (mu_prior_mean, mu_prior_sd) = match &scenario.effect_prior {
                EffectPrior::Normal { mean, sd } => (*mean, *sd),
                EffectPrior::Uniform => unreachable!("checked at construction"),
            };
            let mu = rng.normal(mu_prior_mean, mu_prior_sd);
            let tau = scenario
                .heterogeneity_prior
                .sample(&mut rng)
                .expect("proper prior has a sampler");
            let k = scenario.k_choices[rng.pick(scenario.k_choices.len())];
            let sigmas: Vec<f64> = (0..k)
                .map(|_| rng.uniform_range(scenario.sigma_range.lo(), scenario.sigma_range.hi()))
                .collect();
            let ys: Vec<f64> = sigmas
                .iter()
                .map(|&s| rng.normal(mu, (s * s + tau * tau).sqrt()))
                .collect();
            let data = Dataset::from_values(&ys, &sigmas).ok()?;
            let core = build_core(&data, &config).ok()?;
            let pit_mu = core.mixtures.effect.cdf(mu);
            let pit_tau = core.marginal.cdf(tau);
            (pit_mu.is_finite() && pit_tau.is_finite()).then_some((pit_mu, pit_tau))
        })
        .collect();

    let mut sample = PitSample {
        pit_mu: Vec::with_capacity(scenario.n_sim),
        pit_tau: Vec::with_capacity(scenario.n_sim),
        failures: 0,
    };
    for row in rows {
        match row {
            Some((m, t)) => {
                sample.pit_mu.push(m);
                sample.pit_tau.push(t);
            }
            None => sample.failures += 1,
        }
    }
    Ok(sample)
}

/// One-sample Kolmogorov statistic of `sample` against the uniform
/// distribution on [0, 1], together with the 5% critical value
/// `1.358 / sqrt(n)`.
pub fn ks_uniform(sample: &[f64]) -> Result<(f64, f64)> {
    if sample.is_empty() {
        return Err(Error::domain("KS statistic of an empty sample"));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in sorted.iter().enumerate() {
        let hi = (i + 1) as f64 / n;
        let lo = i as f64 / n;
        d = d.max((x - hi).abs()).max((x - lo).abs());
    }
    Ok((d, 1.358 / n.sqrt()))
}
