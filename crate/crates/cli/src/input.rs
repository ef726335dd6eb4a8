//! Study data input: CSV with a header row, in one of two shapes.
//!
//! Estimate shape:  `label,y,sigma`
//! Count shape:     `label,events_t,total_t,events_c,total_c`
//!
//! The count shape routes through the effect size computation with the
//! configured measure. Parse errors cite the offending line.

use std::path::Path;

use remeta::{escalc, ContingencyTable, Dataset, EffectEstimate, EffectMeasure};

use crate::CliError;

#[derive(Debug)]
pub enum InputData {
    Estimates(Vec<EffectEstimate>),
    Counts(Vec<ContingencyTable>),
}

impl InputData {
    pub fn into_dataset(self, measure: EffectMeasure) -> Result<Dataset, CliError> {
        let estimates = match self {
            InputData::Estimates(estimates) => estimates,
            InputData::Counts(tables) => tables
                .iter()
                .map(|t| escalc(t, measure))
                .collect::<remeta::Result<Vec<_>>>()
                .map_err(CliError::Stat)?,
        };
        Dataset::new(estimates).map_err(CliError::Stat)
    }
}

pub fn read_data(path: &Path) -> Result<InputData, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Io(format!("cannot open {}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();

    const ESTIMATE_SHAPE: [&str; 3] = ["label", "y", "sigma"];
    const COUNT_SHAPE: [&str; 5] = ["label", "events_t", "total_t", "events_c", "total_c"];

    if headers == ESTIMATE_SHAPE {
        let mut estimates = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| CliError::Parse(format!("{e}")))?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let field = |i: usize| -> Result<f64, CliError> {
                record
                    .get(i)
                    .ok_or_else(|| {
                        CliError::Parse(format!("line {line}: missing field {}", i + 1))
                    })?
                    .parse()
                    .map_err(|_| {
                        CliError::Parse(format!(
                            "line {line}: '{}' is not a number",
                            record.get(i).unwrap_or("")
                        ))
                    })
            };
            let label = record
                .get(0)
                .ok_or_else(|| CliError::Parse(format!("line {line}: missing label")))?;
            let estimate = EffectEstimate::new(label, field(1)?, field(2)?)
                .map_err(|e| CliError::Parse(format!("line {line}: {e}")))?;
            estimates.push(estimate);
        }
        if estimates.is_empty() {
            return Err(CliError::Parse(format!(
                "{}: no data rows",
                path.display()
            )));
        }
        Ok(InputData::Estimates(estimates))
    } else if headers == COUNT_SHAPE {
        let mut tables = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| CliError::Parse(format!("{e}")))?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let count = |i: usize| -> Result<u64, CliError> {
                record
                    .get(i)
                    .ok_or_else(|| {
                        CliError::Parse(format!("line {line}: missing field {}", i + 1))
                    })?
                    .parse()
                    .map_err(|_| {
                        CliError::Parse(format!(
                            "line {line}: '{}' is not a count",
                            record.get(i).unwrap_or("")
                        ))
                    })
            };
            let label = record
                .get(0)
                .ok_or_else(|| CliError::Parse(format!("line {line}: missing label")))?;
            let table =
                ContingencyTable::from_totals(label, count(1)?, count(2)?, count(3)?, count(4)?)
                    .map_err(|e| CliError::Parse(format!("line {line}: {e}")))?;
            tables.push(table);
        }
        if tables.is_empty() {
            return Err(CliError::Parse(format!(
                "{}: no data rows",
                path.display()
            )));
        }
        Ok(InputData::Counts(tables))
    } else {
        Err(CliError::Parse(format!(
            "{}: unrecognized header row '{}'; expected 'label,y,sigma' or \
             'label,events_t,total_t,events_c,total_c'",
            path.display(),
            headers.join(",")
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_estimate_shape() {
        let f = write_temp("label,y,sigma\nA,-2.31,0.60\nB,-0.46,0.56\n");
        let data = read_data(f.path()).unwrap();
        let ds = data.into_dataset(EffectMeasure::log_or()).unwrap();
        assert_eq!(ds.k(), 2);
    }

    #[test]
    fn reads_count_shape_through_escalc() {
        let f = write_temp(
            "label,events_t,total_t,events_c,total_c\nHeffron,14,61,15,20\n",
        );
        let data = read_data(f.path()).unwrap();
        let ds = data.into_dataset(EffectMeasure::log_or()).unwrap();
        assert!((ds.estimates()[0].y - -2.3097026).abs() < 1e-6);
    }

    #[test]
    fn malformed_rows_cite_line_numbers() {
        let f = write_temp("label,y,sigma\nA,-2.31,0.60\nB,oops,0.56\n");
        match read_data(f.path()) {
            Err(CliError::Parse(msg)) => assert!(msg.contains("line 3"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
        let f = write_temp("label,y,sigma\nA,-2.31,-1.0\n");
        match read_data(f.path()) {
            Err(CliError::Parse(msg)) => assert!(msg.contains("line 2"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_header_is_rejected() {
        let f = write_temp("foo,bar\n1,2\n");
        assert!(matches!(read_data(f.path()), Err(CliError::Parse(_))));
    }
}
