//! Serialization of analysis results: `summary.json` mirrors the summary
//! table orientation (rows mode/median/mean/sd/lower95/upper95, columns
//! tau/mu/theta_pred/theta_i), plus density and mixture grid dumps as CSV.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use remeta::{AnalysisResult, IntervalKind, ParameterSummary, Target};

use crate::CliError;

#[derive(Debug, Serialize, Deserialize)]
pub struct SummaryDocument {
    pub k: usize,
    pub labels: Vec<String>,
    pub y: Vec<f64>,
    pub sigma: Vec<f64>,
    pub effect_prior: String,
    pub heterogeneity_prior: String,
    pub delta: f64,
    pub epsilon: f64,
    pub interval_type: String,
    /// Row names of the summary table.
    pub rows: Vec<String>,
    /// Column names: tau, mu, theta_pred, then one per study.
    pub columns: Vec<String>,
    /// `values[row][column]`.
    pub values: Vec<Vec<f64>>,
    pub ml_joint: TauMuDoc,
    pub ml_marginal: TauMuDoc,
    pub map_joint: TauMuDoc,
    pub map_marginal: TauMuDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bayes_factor_tau_zero: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bayes_factor_mu_zero: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_evidence: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TauMuDoc {
    pub tau: f64,
    pub mu: f64,
}

fn column(summary: &ParameterSummary) -> Vec<f64> {
    vec![
        summary.mode,
        summary.median,
        summary.mean,
        summary.sd,
        summary.interval.lo,
        summary.interval.hi,
    ]
}

pub fn summary_document(result: &AnalysisResult) -> SummaryDocument {
    let s = result.summary();
    let mut columns = vec!["tau".to_string(), "mu".to_string(), "theta_pred".to_string()];
    for (i, label) in result.data().labels().enumerate() {
        columns.push(format!("theta_{} ({label})", i + 1));
    }
    let col_data: Vec<Vec<f64>> = std::iter::once(column(&s.tau))
        .chain(std::iter::once(column(&s.mu)))
        .chain(std::iter::once(column(&s.predictive)))
        .chain(s.shrinkage.iter().map(column))
        .collect();
    let rows = ["mode", "median", "mean", "sd", "lower95", "upper95"];
    let values: Vec<Vec<f64>> = (0..rows.len())
        .map(|r| col_data.iter().map(|c| c[r]).collect())
        .collect();
    let e = result.estimates();
    SummaryDocument {
        k: result.data().k(),
        labels: result.data().labels().map(str::to_string).collect(),
        y: result.data().ys().collect(),
        sigma: result.data().sigmas().collect(),
        effect_prior: match &result.config().effect_prior {
            remeta::EffectPrior::Uniform => "uniform".to_string(),
            remeta::EffectPrior::Normal { mean, sd } => format!("normal({mean}, {sd})"),
        },
        heterogeneity_prior: result.config().heterogeneity_prior.name(),
        delta: result.config().direct.delta,
        epsilon: result.config().direct.epsilon,
        interval_type: match result.config().interval_type {
            IntervalKind::Shortest => "shortest".to_string(),
            IntervalKind::Central => "central".to_string(),
        },
        rows: rows.iter().map(|r| r.to_string()).collect(),
        columns,
        values,
        ml_joint: TauMuDoc {
            tau: e.ml_joint.tau,
            mu: e.ml_joint.mu,
        },
        ml_marginal: TauMuDoc {
            tau: e.ml_marginal.tau,
            mu: e.ml_marginal.mu,
        },
        map_joint: TauMuDoc {
            tau: e.map_joint.tau,
            mu: e.map_joint.mu,
        },
        map_marginal: TauMuDoc {
            tau: e.map_marginal.tau,
            mu: e.map_marginal.mu,
        },
        bayes_factor_tau_zero: result.bayes_factors().map(|bf| bf.tau_zero),
        bayes_factor_mu_zero: result.bayes_factors().map(|bf| bf.mu_zero),
        log_evidence: result.log_evidence(),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("serialization failed: {e}")))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Density grid dump: 201 points per target over each marginal's bulk.
pub fn write_densities(path: &Path, result: &AnalysisResult) -> Result<(), CliError> {
    let mut out = Vec::new();
    writeln!(out, "target,x,density").expect("in-memory write");
    let mut dump = |name: &str, lo: f64, hi: f64, target: Target| {
        for i in 0..=200 {
            let x = lo + (hi - lo) * i as f64 / 200.0;
            writeln!(out, "{name},{x},{}", result.density(target, x)).expect("in-memory write");
        }
    };
    let tau_hi = result.quantile(Target::Tau, 0.999);
    dump("tau", 0.0, tau_hi, Target::Tau);
    let s = result.summary();
    dump(
        "mu",
        s.mu.mean - 4.0 * s.mu.sd,
        s.mu.mean + 4.0 * s.mu.sd,
        Target::Mu,
    );
    dump(
        "theta_pred",
        s.predictive.mean - 4.0 * s.predictive.sd,
        s.predictive.mean + 4.0 * s.predictive.sd,
        Target::Predictive,
    );
    std::fs::write(path, out)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Mixture grid dump: one record per component and target.
pub fn write_mixtures(path: &Path, result: &AnalysisResult) -> Result<(), CliError> {
    let mut out = Vec::new();
    writeln!(out, "target,tau,weight,mean,sd").expect("in-memory write");
    let mut dump = |name: &str, mixture: &remeta::NormalMixture| {
        let taus = mixture.support_tau().unwrap_or(&[]);
        for (i, c) in mixture.components().iter().enumerate() {
            let tau = taus.get(i).copied().unwrap_or(f64::NAN);
            writeln!(out, "{name},{tau},{},{},{}", c.weight, c.mean, c.sd)
                .expect("in-memory write");
        }
    };
    dump("mu", result.effect_mixture());
    dump("theta_pred", result.predictive_mixture());
    for (i, m) in result.shrinkage_mixtures().iter().enumerate() {
        dump(&format!("theta_{}", i + 1), m);
    }
    std::fs::write(path, out)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}
