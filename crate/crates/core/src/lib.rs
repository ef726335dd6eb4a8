//! Bayesian random-effects meta-analysis in the normal-normal hierarchical
//! model (NNHM), computed by quasi-analytical means — no MCMC.
//!
//! The two-stage model combines `k` study estimates `y_i` with known
//! standard errors `sigma_i`:
//!
//! ```text
//! y_i | theta_i       ~  N(theta_i, sigma_i^2)
//! theta_i | mu, tau   ~  N(mu, tau^2)
//! ```
//!
//! The effect `mu` gets a normal or improper uniform prior, the
//! heterogeneity `tau` any prior from the catalogue in [`priors`].
//! Conditional on `tau` everything is normal, so the only numerical work is
//! one-dimensional: the heterogeneity's marginal posterior is normalized by
//! quadrature ([`model`]), and the effect, shrinkage and predictive
//! posteriors are represented as discrete normal mixtures on an adaptively
//! built `tau` grid with divergence-controlled accuracy ([`mixture`]).
//!
//! The top-level entry point is [`run_analysis`]:
//!
//! ```
//! use remeta::{run_analysis, AnalysisConfig, Dataset, EffectPrior, HeterogeneityPrior};
//!
//! let data = Dataset::from_values(&[-0.51, -0.04, 0.33], &[0.22, 0.27, 0.19])?;
//! let config = AnalysisConfig::new(
//!     EffectPrior::normal(0.0, 4.0)?,
//!     HeterogeneityPrior::half_normal(0.5)?,
//! );
//! let result = run_analysis(&data, &config)?;
//! println!("median effect: {:.3}", result.summary().mu.median);
//! # Ok::<(), remeta::Error>(())
//! ```
//!
//! Posterior predictive p-values live in [`ppcheck`], the simulation-based
//! self-check in [`calibration`], and effect size computation for 2x2
//! tables in [`effects`].

pub mod analysis;
pub mod calibration;
pub mod effects;
mod error;
pub mod mixture;
pub mod model;
pub mod numerics;
pub mod ppcheck;
pub mod priors;

pub use analysis::{
    reml_tau, run_analysis, AnalysisConfig, AnalysisResult, BayesFactors, CredibleInterval,
    IntervalKind, ModeEstimates, ParameterSummary, PointNull, Summary, Target, TauMu,
};
pub use calibration::{ks_uniform, run_calibration, CalibrationScenario, PitSample};
pub use effects::{escalc, unit_information_sd, ContingencyTable, EffectEstimate, EffectMeasure, MeasureKind};
pub use error::{Error, Result};
pub use model::{
    conditional_moments, log_likelihood, log_marginal_likelihood, shrinkage_moments,
    tau_log_posterior_unnorm, tau_marginal, ConditionalMoments, Dataset, TauMarginal,
};
pub use mixture::{
    posterior_mixtures, scale_normal_mixture, symmetrized_divergence, DirectConfig,
    MixtureComponent, NormalMixture, PosteriorMixtures,
};
pub use numerics::{Interval, RngStream};
pub use ppcheck::{
    cochran_q, ppp_value, Alternative, Hypothesis, HypothesisParameter, PpResult, RejectionTail,
    Replicates, Statistic,
};
pub use priors::{EffectPrior, HeterogeneityPrior, StandardErrorContext, TurnerTable};
