//! Shared fixtures for the benchmark suite.

use remeta::{escalc, ContingencyTable, Dataset, EffectMeasure};

/// The six-study immunosuppression data set used throughout the benches.
pub fn example_dataset() -> Dataset {
    let tables = [
        ("Heffron (2003)", 14u64, 61u64, 15u64, 20u64),
        ("Gibelli (2004)", 16, 28, 19, 28),
        ("Schuller (2005)", 3, 18, 8, 12),
        ("Ganschow (2005)", 9, 54, 29, 54),
        ("Spada (2006)", 4, 36, 11, 36),
        ("Gras (2008)", 0, 50, 3, 34),
    ];
    Dataset::new(
        tables
            .iter()
            .map(|&(label, et, nt, ec, nc)| {
                escalc(
                    &ContingencyTable::from_totals(label, et, nt, ec, nc).expect("valid table"),
                    EffectMeasure::log_or(),
                )
                .expect("valid estimate")
            })
            .collect(),
    )
    .expect("valid dataset")
}
