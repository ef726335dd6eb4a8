//! Parsing of prior and measure specification strings, shared between the
//! command line flags and the run configuration file.
//!
//! Heterogeneity priors:
//! `half-normal(s)`, `half-cauchy(s)`, `half-t(s, df)`, `exponential(rate)`,
//! `log-normal(meanlog, sdlog)`, `lomax(scale, shape)`, `power(a)`, `sqrt`,
//! `uniform`, `jeffreys`, `berger-deely`, `conventional`,
//! `uniform-shrinkage`, `dumouchel`, and `turner:<outcome>:<c1>:<c2>`.
//! Effect priors: `uniform`, `normal(mean, sd)`, or plain `mean,sd`.

use remeta::{
    Dataset, EffectPrior, HeterogeneityPrior, IntervalKind, MeasureKind, StandardErrorContext,
};

use crate::CliError;

/// A heterogeneity prior specification; the standard-error dependent
/// families can only be materialized once the data are known.
#[derive(Clone, Debug)]
pub enum TauPriorSpec {
    Ready(HeterogeneityPrior),
    UniformShrinkage,
    DuMouchel,
    Conventional,
    Jeffreys,
    BergerDeely,
}

impl TauPriorSpec {
    pub fn resolve(&self, data: &Dataset) -> Result<HeterogeneityPrior, CliError> {
        let ctx = || -> Result<StandardErrorContext, CliError> {
            StandardErrorContext::new(data.sigmas().collect()).map_err(CliError::Stat)
        };
        Ok(match self {
            TauPriorSpec::Ready(p) => p.clone(),
            TauPriorSpec::UniformShrinkage => {
                HeterogeneityPrior::uniform_shrinkage(&ctx()?).map_err(CliError::Stat)?
            }
            TauPriorSpec::DuMouchel => {
                HeterogeneityPrior::dumouchel(&ctx()?).map_err(CliError::Stat)?
            }
            TauPriorSpec::Conventional => {
                HeterogeneityPrior::conventional(&ctx()?).map_err(CliError::Stat)?
            }
            TauPriorSpec::Jeffreys => {
                HeterogeneityPrior::jeffreys(&ctx()?).map_err(CliError::Stat)?
            }
            TauPriorSpec::BergerDeely => {
                HeterogeneityPrior::berger_deely(&ctx()?).map_err(CliError::Stat)?
            }
        })
    }
}

fn parse_args(spec: &str, name: &str, n: usize) -> Result<Vec<f64>, CliError> {
    let inner = spec
        .strip_prefix(name)
        .and_then(|s| s.trim().strip_prefix('('))
        .and_then(|s| s.trim_end().strip_suffix(')'))
        .ok_or_else(|| {
            CliError::Parse(format!("malformed prior specification '{spec}'"))
        })?;
    let values: Result<Vec<f64>, _> = inner.split(',').map(|v| v.trim().parse()).collect();
    let values =
        values.map_err(|_| CliError::Parse(format!("bad numeric arguments in '{spec}'")))?;
    if values.len() != n {
        return Err(CliError::Parse(format!(
            "'{name}' takes {n} argument(s), got {} in '{spec}'",
            values.len()
        )));
    }
    Ok(values)
}

pub fn parse_tau_prior(spec: &str) -> Result<TauPriorSpec, CliError> {
    let s = spec.trim();
    let lower = s.to_ascii_lowercase();
    let ready = |p: Result<HeterogeneityPrior, remeta::Error>| {
        p.map(TauPriorSpec::Ready).map_err(CliError::Stat)
    };
    match lower.as_str() {
        "uniform" => return Ok(TauPriorSpec::Ready(HeterogeneityPrior::uniform())),
        "sqrt" => return Ok(TauPriorSpec::Ready(HeterogeneityPrior::power(-0.5))),
        "jeffreys" => return Ok(TauPriorSpec::Jeffreys),
        "berger-deely" | "bergerdeely" => return Ok(TauPriorSpec::BergerDeely),
        "conventional" => return Ok(TauPriorSpec::Conventional),
        "uniform-shrinkage" | "uniformshrinkage" => return Ok(TauPriorSpec::UniformShrinkage),
        "dumouchel" => return Ok(TauPriorSpec::DuMouchel),
        _ => {}
    }
    if let Some(rest) = s.strip_prefix("turner:") {
        let parts: Vec<&str> = rest.splitn(3, ':').collect();
        if parts.len() != 3 {
            return Err(CliError::Parse(format!(
                "turner prior needs 'turner:<outcome>:<comparator1>:<comparator2>', got '{s}'"
            )));
        }
        return ready(HeterogeneityPrior::turner(
            parts[0].trim(),
            parts[1].trim(),
            parts[2].trim(),
        ));
    }
    if lower.starts_with("half-normal") {
        let a = parse_args(&lower, "half-normal", 1)?;
        return ready(HeterogeneityPrior::half_normal(a[0]));
    }
    if lower.starts_with("half-cauchy") {
        let a = parse_args(&lower, "half-cauchy", 1)?;
        return ready(HeterogeneityPrior::half_cauchy(a[0]));
    }
    if lower.starts_with("half-student-t") {
        let a = parse_args(&lower, "half-student-t", 2)?;
        return ready(HeterogeneityPrior::half_student_t(a[0], a[1]));
    }
    if lower.starts_with("half-t") {
        let a = parse_args(&lower, "half-t", 2)?;
        return ready(HeterogeneityPrior::half_student_t(a[0], a[1]));
    }
    if lower.starts_with("exponential") {
        let a = parse_args(&lower, "exponential", 1)?;
        return ready(HeterogeneityPrior::exponential(a[0]));
    }
    if lower.starts_with("log-normal") {
        let a = parse_args(&lower, "log-normal", 2)?;
        return ready(HeterogeneityPrior::log_normal(a[0], a[1]));
    }
    if lower.starts_with("lomax") {
        let a = parse_args(&lower, "lomax", 2)?;
        return ready(HeterogeneityPrior::lomax(a[0], a[1]));
    }
    if lower.starts_with("power") {
        let a = parse_args(&lower, "power", 1)?;
        return Ok(TauPriorSpec::Ready(HeterogeneityPrior::power(a[0])));
    }
    Err(CliError::Parse(format!(
        "unknown heterogeneity prior '{spec}'"
    )))
}

pub fn parse_mu_prior(spec: &str) -> Result<EffectPrior, CliError> {
    let s = spec.trim();
    if s.eq_ignore_ascii_case("uniform") {
        return Ok(EffectPrior::Uniform);
    }
    let lower = s.to_ascii_lowercase();
    if lower.starts_with("normal") {
        let a = parse_args(&lower, "normal", 2)?;
        return EffectPrior::normal(a[0], a[1]).map_err(CliError::Stat);
    }
    // plain "mean,sd"
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() == 2 {
        if let (Ok(mean), Ok(sd)) = (parts[0].parse(), parts[1].parse()) {
            return EffectPrior::normal(mean, sd).map_err(CliError::Stat);
        }
    }
    Err(CliError::Parse(format!(
        "effect prior must be 'uniform', 'normal(mean, sd)' or 'mean,sd'; got '{spec}'"
    )))
}

pub fn parse_measure(spec: &str) -> Result<MeasureKind, CliError> {
    match spec.trim().to_ascii_lowercase().as_str() {
        "logor" | "log-or" | "or" => Ok(MeasureKind::LogOddsRatio),
        "logrr" | "log-rr" | "rr" => Ok(MeasureKind::LogRelativeRisk),
        other => Err(CliError::Parse(format!(
            "unknown effect measure '{other}' (expected logor or logrr)"
        ))),
    }
}

pub fn parse_interval(spec: &str) -> Result<IntervalKind, CliError> {
    match spec.trim().to_ascii_lowercase().as_str() {
        "shortest" => Ok(IntervalKind::Shortest),
        "central" => Ok(IntervalKind::Central),
        other => Err(CliError::Parse(format!(
            "unknown interval type '{other}' (expected shortest or central)"
        ))),
    }
}
