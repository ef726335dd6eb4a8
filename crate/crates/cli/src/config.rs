//! The run configuration file (TOML). Unknown keys are rejected; command
//! line flags override file values.

use serde::Deserialize;

use crate::CliError;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub measure: Option<String>,
    #[serde(rename = "effect-prior")]
    pub effect_prior: Option<String>,
    #[serde(rename = "tau-prior")]
    pub tau_prior: Option<String>,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub interval: Option<String>,
    pub seed: Option<u64>,
}

impl RunConfigFile {
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Parse(format!("config {}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects_unknown_keys() {
        let cfg: RunConfigFile = toml::from_str(
            "measure = \"logor\"\n\
             effect-prior = \"normal(0, 4)\"\n\
             tau-prior = \"half-normal(0.5)\"\n\
             delta = 0.01\n\
             epsilon = 1e-4\n\
             interval = \"shortest\"\n\
             seed = 42\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(42));
        assert_eq!(cfg.tau_prior.as_deref(), Some("half-normal(0.5)"));
        let err: Result<RunConfigFile, _> = toml::from_str("unknown-key = 1\n");
        assert!(err.is_err());
    }
}
