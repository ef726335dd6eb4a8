//! Effect size computation: turn 2x2 contingency tables into estimates with
//! standard errors on the log odds ratio or log relative risk scale, plus the
//! matching unit-information prior scales.

use crate::error::{Error, Result};

/// A 2x2 contingency table of event counts.
///
/// Rows are treatment/control, columns event/no event. Row totals must be at
/// least one; individual cells may be zero (handled by the continuity
/// correction during effect computation).
#[derive(Clone, Debug, PartialEq)]
pub struct ContingencyTable {
    label: String,
    treatment_events: u64,
    treatment_nonevents: u64,
    control_events: u64,
    control_nonevents: u64,
}

impl ContingencyTable {
    pub fn new(
        label: impl Into<String>,
        treatment_events: u64,
        treatment_nonevents: u64,
        control_events: u64,
        control_nonevents: u64,
    ) -> Result<Self> {
        let label = label.into();
        if treatment_events + treatment_nonevents == 0 {
            return Err(Error::domain(format!(
                "table '{label}': treatment row total is zero"
            )));
        }
        if control_events + control_nonevents == 0 {
            return Err(Error::domain(format!(
                "table '{label}': control row total is zero"
            )));
        }
        Ok(ContingencyTable {
            label,
            treatment_events,
            treatment_nonevents,
            control_events,
            control_nonevents,
        })
    }

    /// Build a table from events and group totals (the usual reporting
    /// format).
    pub fn from_totals(
        label: impl Into<String>,
        treatment_events: u64,
        treatment_total: u64,
        control_events: u64,
        control_total: u64,
    ) -> Result<Self> {
        let label = label.into();
        if treatment_events > treatment_total || control_events > control_total {
            return Err(Error::domain(format!(
                "table '{label}': events exceed group total"
            )));
        }
        ContingencyTable::new(
            label,
            treatment_events,
            treatment_total - treatment_events,
            control_events,
            control_total - control_events,
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn counts(&self) -> (u64, u64, u64, u64) {
        (
            self.treatment_events,
            self.treatment_nonevents,
            self.control_events,
            self.control_nonevents,
        )
    }

    pub fn total(&self) -> u64 {
        self.treatment_events + self.treatment_nonevents + self.control_events
            + self.control_nonevents
    }
}

/// Effect scale for binary outcome data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasureKind {
    LogOddsRatio,
    LogRelativeRisk,
}

/// An effect measure together with its continuity correction. The correction
/// is added to all four cells of a table, but only for tables that actually
/// contain a zero in a cell the measure depends on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectMeasure {
    pub kind: MeasureKind,
    pub continuity_correction: f64,
}

impl EffectMeasure {
    pub fn log_or() -> Self {
        EffectMeasure {
            kind: MeasureKind::LogOddsRatio,
            continuity_correction: 0.5,
        }
    }

    pub fn log_rr() -> Self {
        EffectMeasure {
            kind: MeasureKind::LogRelativeRisk,
            continuity_correction: 0.5,
        }
    }

    pub fn with_correction(mut self, correction: f64) -> Result<Self> {
        if !(correction >= 0.0) {
            return Err(Error::domain(format!(
                "continuity correction must be >= 0, got {correction}"
            )));
        }
        self.continuity_correction = correction;
        Ok(self)
    }
}

/// One study's estimate on the analysis scale.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectEstimate {
    pub label: String,
    pub y: f64,
    pub sigma: f64,
}

impl EffectEstimate {
    pub fn new(label: impl Into<String>, y: f64, sigma: f64) -> Result<Self> {
        let label = label.into();
        if !y.is_finite() {
            return Err(Error::domain(format!(
                "estimate '{label}': y must be finite, got {y}"
            )));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::domain(format!(
                "estimate '{label}': sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(EffectEstimate { label, y, sigma })
    }
}

/// Compute the effect estimate and its standard error from a contingency
/// table.
///
/// Log odds ratio: `y = log(a d / (b c))`, `sigma = sqrt(1/a + 1/b + 1/c + 1/d)`.
/// Log relative risk: `y = log((a/(a+b)) / (c/(c+d)))`,
/// `sigma = sqrt(1/a - 1/(a+b) + 1/c - 1/(c+d))`.
///
/// If a relevant cell is zero (any cell for the log-OR, an events cell for
/// the log-RR), the continuity correction is first added to all four cells.
pub fn escalc(table: &ContingencyTable, measure: EffectMeasure) -> Result<EffectEstimate> {
    let (a, b, c, d) = table.counts();
    let needs_correction = match measure.kind {
        MeasureKind::LogOddsRatio => a == 0 || b == 0 || c == 0 || d == 0,
        MeasureKind::LogRelativeRisk => a == 0 || c == 0,
    };
    let corr = if needs_correction {
        measure.continuity_correction
    } else {
        0.0
    };
    let a = a as f64 + corr;
    let b = b as f64 + corr;
    let c = c as f64 + corr;
    let d = d as f64 + corr;

    let (y, var) = match measure.kind {
        MeasureKind::LogOddsRatio => {
            if a == 0.0 || b == 0.0 || c == 0.0 || d == 0.0 {
                return Err(Error::domain(format!(
                    "table '{}': zero cell and no continuity correction; log-OR undefined",
                    table.label()
                )));
            }
            let y = (a * d / (b * c)).ln();
            (y, 1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d)
        }
        MeasureKind::LogRelativeRisk => {
            if a == 0.0 || c == 0.0 {
                return Err(Error::domain(format!(
                    "table '{}': zero events cell and no continuity correction; log-RR undefined",
                    table.label()
                )));
            }
            let n1 = a + b;
            let n2 = c + d;
            let y = ((a / n1) / (c / n2)).ln();
            (y, 1.0 / a - 1.0 / n1 + 1.0 / c - 1.0 / n2)
        }
    };
    EffectEstimate::new(table.label(), y, var.sqrt())
}

/// Standard deviation of the unit information prior for a given event
/// probability `p`: the prior whose variance matches the information in a
/// single observation.
///
/// Log-OR: `2 / sqrt(p (1-p))` (equals 4 at p = 1/2).
/// Log-RR: `2 sqrt((1-p) / p)` (equals 2 at p = 1/2).
pub fn unit_information_sd(kind: MeasureKind, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!(
            "unit_information_sd: p must lie in (0, 1), got {p}"
        )));
    }
    Ok(match kind {
        MeasureKind::LogOddsRatio => 2.0 / (p * (1.0 - p)).sqrt(),
        MeasureKind::LogRelativeRisk => 2.0 * ((1.0 - p) / p).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn table(a: u64, b: u64, c: u64, d: u64) -> ContingencyTable {
        ContingencyTable::new("t", a, b, c, d).unwrap()
    }

    #[test]
    fn log_or_reference_studies() {
        let e = escalc(&table(14, 47, 15, 5), EffectMeasure::log_or()).unwrap();
        assert_abs_diff_eq!(e.y, -2.3097026, epsilon = 1e-6);
        assert_abs_diff_eq!(e.sigma, 0.5994763, epsilon = 1e-6);

        let e = escalc(&table(16, 12, 19, 9), EffectMeasure::log_or()).unwrap();
        assert_abs_diff_eq!(e.y, -0.4595323, epsilon = 1e-6);
        assert_abs_diff_eq!(e.sigma, 0.5563956, epsilon = 1e-6);
    }

    #[test]
    fn symmetric_table_gives_zero_effect() {
        let e = escalc(&table(10, 10, 10, 10), EffectMeasure::log_or()).unwrap();
        assert_eq!(e.y, 0.0);
        assert_abs_diff_eq!(e.sigma, 0.4_f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn zero_cell_takes_correction_path() {
        let e = escalc(&table(0, 50, 3, 31), EffectMeasure::log_or()).unwrap();
        assert_abs_diff_eq!(e.y, -2.42, epsilon = 5e-3);
        assert_abs_diff_eq!(e.sigma, 1.53, epsilon = 5e-3);
    }

    #[test]
    fn zero_cell_without_correction_errors() {
        let m = EffectMeasure::log_or().with_correction(0.0).unwrap();
        assert!(escalc(&table(0, 50, 3, 31), m).is_err());
    }

    #[test]
    fn zero_row_total_is_rejected() {
        assert!(ContingencyTable::new("t", 0, 0, 3, 31).is_err());
    }

    #[test]
    fn log_rr_formula() {
        // a=10,b=90,c=20,d=80: RR = 0.1/0.2
        let e = escalc(&table(10, 90, 20, 80), EffectMeasure::log_rr()).unwrap();
        assert_abs_diff_eq!(e.y, (0.5_f64).ln(), epsilon = 1e-12);
        let var: f64 = 0.1 - 0.01 + 0.05 - 0.01;
        assert_abs_diff_eq!(e.sigma, var.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn log_rr_corrects_only_on_events_cells() {
        // b = 0 does not trigger the log-RR correction
        let e = escalc(&table(5, 0, 2, 8), EffectMeasure::log_rr()).unwrap();
        assert_abs_diff_eq!(e.y, (1.0_f64 / 0.2).ln(), epsilon = 1e-12);
    }

    #[test]
    fn unit_information_scales() {
        assert_abs_diff_eq!(
            unit_information_sd(MeasureKind::LogOddsRatio, 0.5).unwrap(),
            4.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            unit_information_sd(MeasureKind::LogRelativeRisk, 0.5).unwrap(),
            2.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            unit_information_sd(MeasureKind::LogOddsRatio, 0.1).unwrap(),
            2.0 / 0.09_f64.sqrt(),
            epsilon = 1e-10
        );
        assert!(unit_information_sd(MeasureKind::LogOddsRatio, 0.0).is_err());
    }

    proptest::proptest! {
        /// Swapping the two rows negates the log-OR and keeps sigma.
        #[test]
        fn log_or_antisymmetry(a in 1u64..200, b in 1u64..200, c in 1u64..200, d in 1u64..200) {
            let e1 = escalc(&table(a, b, c, d), EffectMeasure::log_or()).unwrap();
            let e2 = escalc(&table(c, d, a, b), EffectMeasure::log_or()).unwrap();
            proptest::prop_assert!((e1.y + e2.y).abs() < 1e-12);
            proptest::prop_assert!((e1.sigma - e2.sigma).abs() < 1e-12);
        }

        /// With all cells positive no correction is applied: the direct
        /// formula must agree exactly.
        #[test]
        fn log_or_matches_hand_formula(a in 1u64..500, b in 1u64..500, c in 1u64..500, d in 1u64..500) {
            let e = escalc(&table(a, b, c, d), EffectMeasure::log_or()).unwrap();
            let (af, bf, cf, df) = (a as f64, b as f64, c as f64, d as f64);
            let y = (af * df / (bf * cf)).ln();
            let s = (1.0 / af + 1.0 / bf + 1.0 / cf + 1.0 / df).sqrt();
            proptest::prop_assert!((e.y - y).abs() < 1e-12);
            proptest::prop_assert!((e.sigma - s).abs() < 1e-12);
        }

        /// The log-OR unit information sd is minimized at p = 1/2 where it
        /// equals 4.
        #[test]
        fn unit_information_lower_bound(p in 0.0001f64..0.9999) {
            let sd = unit_information_sd(MeasureKind::LogOddsRatio, p).unwrap();
            proptest::prop_assert!(sd >= 4.0 - 1e-12);
        }
    }
}
