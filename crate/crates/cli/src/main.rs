//! Command line front end: parse study data, configure priors, run the
//! analysis or one of the checks, and write JSON/CSV/SVG results.
//!
//! Exit codes: 0 on success, 2 for parse errors (data, config, prior
//! specifications), 3 for domain/propriety errors, 4 for I/O failures.

mod config;
mod forest;
mod input;
mod report;
mod spec;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use remeta::calibration::{CalibrationScenario, PitSample};
use remeta::ppcheck::{Alternative, Hypothesis, HypothesisParameter, RejectionTail, Statistic};
use remeta::{
    run_analysis, AnalysisConfig, Dataset, DirectConfig, EffectMeasure, EffectPrior,
    HeterogeneityPrior, Interval, IntervalKind, ParameterSummary,
};

#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Stat(remeta::Error),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Stat(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(msg) => write!(f, "{msg}"),
            CliError::Stat(e) => write!(f, "{e}"),
            CliError::Io(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<remeta::Error> for CliError {
    fn from(e: remeta::Error) -> Self {
        CliError::Stat(e)
    }
}

#[derive(Parser)]
#[command(
    name = "remeta",
    version,
    about = "Bayesian random-effects meta-analysis without MCMC"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full meta-analysis and write summary.json, densities.csv,
    /// mixture.csv and forest.svg.
    Analyze(AnalyzeArgs),
    /// Compute effect sizes from 2x2 count data and write escalc.json.
    Escalc(EscalcArgs),
    /// Prior predictive distribution of a study effect under a
    /// heterogeneity prior; writes priorpred.json.
    Priorpred(PriorpredArgs),
    /// Posterior predictive p-value; writes ppp.json (and replicates.csv).
    Ppp(PppArgs),
    /// Simulation-based calibration check; writes calibration.json and
    /// pit.csv.
    Calibrate(CalibrateArgs),
}

#[derive(Args, Clone)]
struct AnalysisOpts {
    /// Study data CSV: 'label,y,sigma' or
    /// 'label,events_t,total_t,events_c,total_c'.
    #[arg(long)]
    data: PathBuf,
    /// Run configuration file (TOML); flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Effect measure for count data: logor | logrr.
    #[arg(long)]
    measure: Option<String>,
    /// Effect prior: 'uniform', 'normal(mean,sd)' or 'mean,sd'.
    #[arg(long)]
    mu_prior: Option<String>,
    /// Heterogeneity prior specification.
    #[arg(long)]
    tau_prior: Option<String>,
    /// Divergence bound of the mixture grid.
    #[arg(long)]
    delta: Option<f64>,
    /// Neglected tail mass of the mixture grid.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Credible interval type: shortest | central.
    #[arg(long)]
    interval: Option<String>,
    /// Random seed for sampling-based commands.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    opts: AnalysisOpts,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EscalcArgs {
    /// Count-shaped study data CSV.
    #[arg(long)]
    data: PathBuf,
    /// Effect measure: logor | logrr.
    #[arg(long, default_value = "logor")]
    measure: String,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PriorpredArgs {
    /// Prior family: half-normal | half-cauchy | half-t | exponential |
    /// log-normal | lomax.
    #[arg(long)]
    family: String,
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    df: Option<f64>,
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    meanlog: Option<f64>,
    #[arg(long)]
    sdlog: Option<f64>,
    #[arg(long)]
    shape: Option<f64>,
    /// Mean of the mixed normal distributions.
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    /// Quantile levels to report (repeatable).
    #[arg(long = "p", required = true)]
    probs: Vec<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PppArgs {
    #[command(flatten)]
    opts: AnalysisOpts,
    /// Hypothesis parameter: mu, tau, or a study label/index.
    #[arg(long)]
    parameter: String,
    /// Hypothesized value.
    #[arg(long, default_value_t = 0.0)]
    value: f64,
    /// Direction of the alternative: less | greater.
    #[arg(long)]
    alternative: String,
    /// Discrepancy statistic: cdf | q.
    #[arg(long)]
    statistic: String,
    /// Number of Monte Carlo replications.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Also write the replicate draws to replicates.csv.
    #[arg(long)]
    dump_replicates: bool,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Number of simulation replicates.
    #[arg(long, default_value_t = 1000)]
    n_sim: usize,
    /// Candidate study counts, comma separated.
    #[arg(long, default_value = "2,3,5,10,20")]
    k_choices: String,
    /// Standard error range 'lo,hi'.
    #[arg(long, default_value = "0.2,1.0")]
    sigma_range: String,
    /// Effect prior (must be normal).
    #[arg(long, default_value = "normal(0,4)")]
    mu_prior: String,
    /// Heterogeneity prior (must be proper).
    #[arg(long, default_value = "half-normal(0.5)")]
    tau_prior: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Escalc(args) => cmd_escalc(args),
        Command::Priorpred(args) => cmd_priorpred(args),
        Command::Ppp(args) => cmd_ppp(args),
        Command::Calibrate(args) => cmd_calibrate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn ensure_out_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
    // Probe writability early so all outputs fail together.
    let probe = path.join(".write-probe");
    std::fs::write(&probe, b"")
        .map_err(|e| CliError::Io(format!("cannot write into {}: {e}", path.display())))?;
    let _ = std::fs::remove_file(&probe);
    Ok(())
}

/// Resolve data, configuration file and flags into a dataset, an analysis
/// configuration and a seed.
fn prepare(opts: &AnalysisOpts) -> Result<(Dataset, AnalysisConfig, u64), CliError> {
    let file_cfg = match &opts.config {
        Some(path) => config::RunConfigFile::load(path)?,
        None => config::RunConfigFile::default(),
    };
    let measure_spec = opts
        .measure
        .clone()
        .or(file_cfg.measure)
        .unwrap_or_else(|| "logor".to_string());
    let kind = spec::parse_measure(&measure_spec)?;
    let measure = EffectMeasure {
        kind,
        continuity_correction: 0.5,
    };
    let data = input::read_data(&opts.data)?.into_dataset(measure)?;

    let mu_spec = opts
        .mu_prior
        .clone()
        .or(file_cfg.effect_prior)
        .unwrap_or_else(|| "uniform".to_string());
    let effect_prior = spec::parse_mu_prior(&mu_spec)?;

    let tau_spec = opts
        .tau_prior
        .clone()
        .or(file_cfg.tau_prior)
        .unwrap_or_else(|| "uniform".to_string());
    let heterogeneity_prior = spec::parse_tau_prior(&tau_spec)?.resolve(&data)?;

    let delta = opts.delta.or(file_cfg.delta).unwrap_or(0.01);
    let epsilon = opts.epsilon.or(file_cfg.epsilon).unwrap_or(1e-4);
    let direct = DirectConfig::new(delta, epsilon)?;

    let interval = match opts.interval.clone().or(file_cfg.interval) {
        Some(s) => spec::parse_interval(&s)?,
        None => IntervalKind::Shortest,
    };

    let seed = opts.seed.or(file_cfg.seed).unwrap_or(1);
    let config = AnalysisConfig::new(effect_prior, heterogeneity_prior)
        .with_direct(direct)
        .with_interval_type(interval);
    Ok((data, config, seed))
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let (data, config, _seed) = prepare(&args.opts)?;
    ensure_out_dir(&args.out)?;
    let result = run_analysis(&data, &config)?;
    report::write_json(
        &args.out.join("summary.json"),
        &report::summary_document(&result),
    )?;
    report::write_densities(&args.out.join("densities.csv"), &result)?;
    report::write_mixtures(&args.out.join("mixture.csv"), &result)?;
    forest::render_forest(&result, &args.out.join("forest.svg"))?;

    let s = result.summary();
    println!("k = {} studies", data.k());
    println!("          {:>12} {:>12} {:>12}", "tau", "mu", "theta_pred");
    type Field = fn(&ParameterSummary) -> f64;
    let rows: [(&str, Field); 6] = [
        ("mode", |p| p.mode),
        ("median", |p| p.median),
        ("mean", |p| p.mean),
        ("sd", |p| p.sd),
        ("lower95", |p| p.interval.lo),
        ("upper95", |p| p.interval.hi),
    ];
    for (name, f) in rows {
        println!(
            "{name:<9} {:>12.7} {:>12.7} {:>12.7}",
            f(&s.tau),
            f(&s.mu),
            f(&s.predictive)
        );
    }
    println!("results written to {}", args.out.display());
    Ok(())
}

#[derive(serde::Serialize)]
struct EscalcRecord {
    label: String,
    y: f64,
    sigma: f64,
}

fn cmd_escalc(args: EscalcArgs) -> Result<(), CliError> {
    let kind = spec::parse_measure(&args.measure)?;
    let measure = EffectMeasure {
        kind,
        continuity_correction: 0.5,
    };
    let data = input::read_data(&args.data)?.into_dataset(measure)?;
    ensure_out_dir(&args.out)?;
    let records: Vec<EscalcRecord> = data
        .estimates()
        .iter()
        .map(|e| EscalcRecord {
            label: e.label.clone(),
            y: e.y,
            sigma: e.sigma,
        })
        .collect();
    report::write_json(&args.out.join("escalc.json"), &records)?;
    for r in &records {
        println!("{}: y = {:.7}, sigma = {:.7}", r.label, r.y, r.sigma);
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct PriorPredDocument {
    family: String,
    mu: f64,
    delta: f64,
    epsilon: f64,
    components: usize,
    quantiles: Vec<QuantileEntry>,
}

#[derive(serde::Serialize)]
struct QuantileEntry {
    p: f64,
    value: f64,
}

fn cmd_priorpred(args: PriorpredArgs) -> Result<(), CliError> {
    let need = |v: Option<f64>, what: &str| {
        v.ok_or_else(|| {
            CliError::Parse(format!("--{what} is required for family '{}'", args.family))
        })
    };
    let prior = match args.family.to_ascii_lowercase().as_str() {
        "half-normal" => HeterogeneityPrior::half_normal(need(args.scale, "scale")?)?,
        "half-cauchy" => HeterogeneityPrior::half_cauchy(need(args.scale, "scale")?)?,
        "half-t" | "half-student-t" => {
            HeterogeneityPrior::half_student_t(need(args.scale, "scale")?, need(args.df, "df")?)?
        }
        "exponential" => HeterogeneityPrior::exponential(need(args.rate, "rate")?)?,
        "log-normal" => HeterogeneityPrior::log_normal(
            need(args.meanlog, "meanlog")?,
            need(args.sdlog, "sdlog")?,
        )?,
        "lomax" => {
            HeterogeneityPrior::lomax(need(args.scale, "scale")?, need(args.shape, "shape")?)?
        }
        other => {
            return Err(CliError::Parse(format!(
                "unknown prior family '{other}' for the prior predictive"
            )))
        }
    };
    for &p in &args.probs {
        if !(p > 0.0 && p < 1.0) {
            return Err(CliError::Parse(format!("quantile level {p} not in (0, 1)")));
        }
    }
    let direct = DirectConfig::new(args.delta.unwrap_or(0.01), args.epsilon.unwrap_or(1e-4))?;
    let mixture = remeta::scale_normal_mixture(&prior, args.mu, &direct)?;
    ensure_out_dir(&args.out)?;
    let doc = PriorPredDocument {
        family: prior.name(),
        mu: args.mu,
        delta: direct.delta,
        epsilon: direct.epsilon,
        components: mixture.len(),
        quantiles: args
            .probs
            .iter()
            .map(|&p| QuantileEntry {
                p,
                value: mixture.quantile(p),
            })
            .collect(),
    };
    report::write_json(&args.out.join("priorpred.json"), &doc)?;
    for q in &doc.quantiles {
        println!("q({}) = {:.6}", q.p, q.value);
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct PppDocument {
    parameter: String,
    value: f64,
    alternative: String,
    statistic: String,
    n: usize,
    seed: u64,
    p_value: f64,
    observed_statistic: f64,
    failures: usize,
}

fn cmd_ppp(args: PppArgs) -> Result<(), CliError> {
    let (data, config, seed) = prepare(&args.opts)?;
    ensure_out_dir(&args.out)?;

    let alternative = match args.alternative.to_ascii_lowercase().as_str() {
        "less" => Alternative::Less,
        "greater" => Alternative::Greater,
        other => {
            return Err(CliError::Parse(format!(
                "unknown alternative '{other}' (expected less or greater)"
            )))
        }
    };
    let hypothesis = match args.parameter.to_ascii_lowercase().as_str() {
        "mu" => Hypothesis::new(HypothesisParameter::Mu, args.value, alternative),
        "tau" => Hypothesis::new(HypothesisParameter::Tau, args.value, alternative),
        _ => {
            if let Ok(index) = args.parameter.parse::<usize>() {
                if index == 0 || index > data.k() {
                    return Err(CliError::Parse(format!(
                        "study index {index} out of range 1..={}",
                        data.k()
                    )));
                }
                Hypothesis::new(
                    HypothesisParameter::Theta(index - 1),
                    args.value,
                    alternative,
                )
            } else {
                Hypothesis::theta_labeled(&data, &args.parameter, args.value, alternative)?
            }
        }
    };
    let statistic = match args.statistic.to_ascii_lowercase().as_str() {
        "cdf" => Statistic::PosteriorCdf,
        "q" => Statistic::CochranQ,
        other => {
            return Err(CliError::Parse(format!(
                "unknown statistic '{other}' (expected cdf or q; arbitrary statistics \
                 are available through the library interface)"
            )))
        }
    };

    let result = run_analysis(&data, &config)?;
    let pp = remeta::ppp_value(
        &result,
        &hypothesis,
        statistic,
        RejectionTail::Auto,
        args.n,
        seed,
        None,
    )?;

    let doc = PppDocument {
        parameter: args.parameter.clone(),
        value: args.value,
        alternative: args.alternative.clone(),
        statistic: args.statistic.clone(),
        n: pp.n,
        seed: pp.seed,
        p_value: pp.p_value,
        observed_statistic: pp.observed_statistic,
        failures: pp.failures,
    };
    report::write_json(&args.out.join("ppp.json"), &doc)?;

    if args.dump_replicates {
        use std::fmt::Write as _;
        let mut out = String::new();
        let k = data.k();
        let _ = write!(out, "tau,mu,statistic,tail_flag");
        for i in 1..=k {
            let _ = write!(out, ",theta_{i}");
        }
        for i in 1..=k {
            let _ = write!(out, ",y_{i}");
        }
        let _ = writeln!(out);
        let r = &pp.replicates;
        for j in 0..r.statistic.len() {
            let _ = write!(
                out,
                "{},{},{},{}",
                r.tau[j], r.mu[j], r.statistic[j], r.tail_flag[j]
            );
            for v in &r.theta[j] {
                let _ = write!(out, ",{v}");
            }
            for v in &r.y[j] {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(out);
        }
        std::fs::write(args.out.join("replicates.csv"), out)
            .map_err(|e| CliError::Io(format!("cannot write replicates.csv: {e}")))?;
    }

    println!(
        "p-value = {} (observed statistic {:.7}, {} replicates, seed {})",
        pp.p_value, pp.observed_statistic, pp.n, pp.seed
    );
    Ok(())
}

#[derive(serde::Serialize)]
struct CalibrationDocument {
    n_sim: usize,
    seed: u64,
    failures: usize,
    flagged: bool,
    ks_mu: KsEntry,
    ks_tau: KsEntry,
    coverage_mu: Vec<CoverageEntry>,
    coverage_tau: Vec<CoverageEntry>,
}

#[derive(serde::Serialize)]
struct KsEntry {
    distance: f64,
    critical_05: f64,
}

#[derive(serde::Serialize)]
struct CoverageEntry {
    level: f64,
    coverage: f64,
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<(), CliError> {
    let effect_prior = spec::parse_mu_prior(&args.mu_prior)?;
    if !matches!(effect_prior, EffectPrior::Normal { .. }) {
        return Err(CliError::Parse(
            "calibration needs a normal effect prior".to_string(),
        ));
    }
    let tau_prior = match spec::parse_tau_prior(&args.tau_prior)? {
        spec::TauPriorSpec::Ready(p) => p,
        _ => {
            return Err(CliError::Parse(
                "calibration needs a data-independent proper heterogeneity prior".to_string(),
            ))
        }
    };
    let k_choices: Vec<usize> = args
        .k_choices
        .split(',')
        .map(|v| v.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Parse(format!("bad k choices '{}'", args.k_choices)))?;
    let range: Vec<f64> = args
        .sigma_range
        .split(',')
        .map(|v| v.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Parse(format!("bad sigma range '{}'", args.sigma_range)))?;
    if range.len() != 2 {
        return Err(CliError::Parse("sigma range must be 'lo,hi'".to_string()));
    }
    let scenario = CalibrationScenario::new(
        effect_prior,
        tau_prior,
        k_choices,
        Interval::new(range[0], range[1])?,
        args.n_sim,
        args.seed,
    )?;
    ensure_out_dir(&args.out)?;
    let sample = remeta::run_calibration(&scenario)?;
    let (d_mu, crit) = remeta::ks_uniform(&sample.pit_mu)?;
    let (d_tau, _) = remeta::ks_uniform(&sample.pit_tau)?;
    let levels = [0.5, 0.8, 0.9, 0.95, 0.99];
    let doc = CalibrationDocument {
        n_sim: args.n_sim,
        seed: args.seed,
        failures: sample.failures,
        flagged: sample.flagged(args.n_sim),
        ks_mu: KsEntry {
            distance: d_mu,
            critical_05: crit,
        },
        ks_tau: KsEntry {
            distance: d_tau,
            critical_05: crit,
        },
        coverage_mu: levels
            .iter()
            .map(|&level| CoverageEntry {
                level,
                coverage: PitSample::one_sided_coverage(&sample.pit_mu, level),
            })
            .collect(),
        coverage_tau: levels
            .iter()
            .map(|&level| CoverageEntry {
                level,
                coverage: PitSample::one_sided_coverage(&sample.pit_tau, level),
            })
            .collect(),
    };
    report::write_json(&args.out.join("calibration.json"), &doc)?;
    let mut pit = String::from("pit_mu,pit_tau\n");
    for (m, t) in sample.pit_mu.iter().zip(&sample.pit_tau) {
        pit.push_str(&format!("{m},{t}\n"));
    }
    std::fs::write(args.out.join("pit.csv"), pit)
        .map_err(|e| CliError::Io(format!("cannot write pit.csv: {e}")))?;
    println!(
        "KS distances: mu {d_mu:.4}, tau {d_tau:.4} (5% critical {crit:.4}); failures {}",
        sample.failures
    );
    Ok(())
}
