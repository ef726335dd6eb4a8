//! Lookup table of empirically derived log-normal heterogeneity priors,
//! keyed by outcome type and comparator pair.
//!
//! The built-in table ships only the cell whose quantiles are verifiable
//! against published output; further cells can be loaded from a text file
//! with records `outcome,comparator1,comparator2,meanlog,sdlog` (UTF-8,
//! comma-separated, `#` starts a comment line).

use std::sync::OnceLock;

use super::HeterogeneityPrior;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
struct TurnerCell {
    outcome: String,
    comparator1: String,
    comparator2: String,
    meanlog: f64,
    sdlog: f64,
}

/// A table of log-normal prior parameters for heterogeneity on the log-OR
/// scale.
#[derive(Clone, Debug, Default)]
pub struct TurnerTable {
    cells: Vec<TurnerCell>,
}

const BUILTIN: &str = include_str!("turner_table.csv");

impl TurnerTable {
    /// The table shipped with the crate.
    pub fn builtin() -> &'static TurnerTable {
        static TABLE: OnceLock<TurnerTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            TurnerTable::parse(BUILTIN).expect("built-in prior table must parse")
        })
    }

    /// Parse a table from text. Lines starting with `#` (and blank lines)
    /// are skipped; fields are trimmed.
    pub fn parse(text: &str) -> Result<TurnerTable> {
        let mut cells = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 5 {
                return Err(Error::domain(format!(
                    "prior table line {}: expected 5 comma-separated fields, got {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let meanlog: f64 = fields[3].parse().map_err(|_| {
                Error::domain(format!(
                    "prior table line {}: bad meanlog '{}'",
                    lineno + 1,
                    fields[3]
                ))
            })?;
            let sdlog: f64 = fields[4].parse().map_err(|_| {
                Error::domain(format!(
                    "prior table line {}: bad sdlog '{}'",
                    lineno + 1,
                    fields[4]
                ))
            })?;
            if !(sdlog > 0.0) {
                return Err(Error::domain(format!(
                    "prior table line {}: sdlog must be positive",
                    lineno + 1
                )));
            }
            cells.push(TurnerCell {
                outcome: fields[0].to_string(),
                comparator1: fields[1].to_string(),
                comparator2: fields[2].to_string(),
                meanlog,
                sdlog,
            });
        }
        Ok(TurnerTable { cells })
    }

    /// List the available `(outcome, comparator1, comparator2)` keys.
    pub fn keys(&self) -> Vec<(String, String, String)> {
        self.cells
            .iter()
            .map(|c| {
                (
                    c.outcome.clone(),
                    c.comparator1.clone(),
                    c.comparator2.clone(),
                )
            })
            .collect()
    }

    /// Look up a cell and build the log-normal prior for it.
    pub fn prior(
        &self,
        outcome: &str,
        comparator1: &str,
        comparator2: &str,
    ) -> Result<HeterogeneityPrior> {
        // Comparator order is irrelevant for the heterogeneity.
        let cell = self.cells.iter().find(|c| {
            c.outcome == outcome
                && ((c.comparator1 == comparator1 && c.comparator2 == comparator2)
                    || (c.comparator1 == comparator2 && c.comparator2 == comparator1))
        });
        match cell {
            Some(c) => HeterogeneityPrior::log_normal(c.meanlog, c.sdlog),
            None => {
                let available: Vec<String> = self
                    .cells
                    .iter()
                    .map(|c| format!("({}, {}, {})", c.outcome, c.comparator1, c.comparator2))
                    .collect();
                Err(Error::Lookup(format!(
                    "no prior for ({outcome}, {comparator1}, {comparator2}); available cells: {}",
                    available.join(", ")
                )))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn builtin_cell_reproduces_quantiles() {
        let prior = TurnerTable::builtin()
            .prior("surgical", "pharmacological", "placebo / control")
            .unwrap();
        assert_abs_diff_eq!(prior.quantile(0.025).unwrap(), 0.06233896, epsilon = 1e-6);
        assert_abs_diff_eq!(prior.quantile(0.5).unwrap(), 0.34300852, epsilon = 1e-6);
        assert_abs_diff_eq!(prior.quantile(0.975).unwrap(), 1.88734045, epsilon = 1e-6);
    }

    #[test]
    fn back_solved_parameters_match_quantiles() {
        // Independent derivation: meanlog from the median, sdlog from the
        // quantile spread, then the lower quantile must be reproduced.
        use crate::numerics::normal_quantile;
        let z = normal_quantile(0.975, 0.0, 1.0);
        let meanlog = 0.34300852_f64.ln();
        let sdlog = (1.88734045_f64.ln() - meanlog) / z;
        let prior = HeterogeneityPrior::log_normal(meanlog, sdlog).unwrap();
        assert_abs_diff_eq!(prior.quantile(0.025).unwrap(), 0.06233896, epsilon = 1e-6);
    }

    #[test]
    fn unknown_cell_lists_available_keys() {
        let err = TurnerTable::builtin().prior("hematological", "x", "y");
        match err {
            Err(Error::Lookup(msg)) => {
                assert!(msg.contains("surgical"), "message should list keys: {msg}")
            }
            other => panic!("expected lookup error, got {other:?}"),
        }
    }

    #[test]
    fn user_tables_parse_and_reject_garbage() {
        let table = TurnerTable::parse(
            "# comment\nresp,drug,placebo,-0.5,0.3\n\nother,a,b,-1.0,0.9\n",
        )
        .unwrap();
        assert_eq!(table.keys().len(), 2);
        assert!(table.prior("resp", "placebo", "drug").is_ok());
        assert!(TurnerTable::parse("a,b,c\n").is_err());
        assert!(TurnerTable::parse("a,b,c,xx,0.3\n").is_err());
        assert!(TurnerTable::parse("a,b,c,0.1,-0.3\n").is_err());
    }
}
