//! Ingestion of raw four-fold coincidence-count tables, experimental
//! correlators and witness values, Monte Carlo Poisson error bars, and the
//! two-setting stabilizer fidelity witness.

mod counts;
mod monte_carlo;
mod stabilizer;
mod witness_eval;

pub use counts::{
    basis_observable, correlator_from_counts, dataset_to_csv, parse_dataset, synthetic_dataset,
    BasisTag, CountRecord, ExperimentDataset, SettingLabel,
};
pub use monte_carlo::monte_carlo_sigma;
pub use stabilizer::{stabilizer_fidelity, StabilizerReport};
pub use witness_eval::{eval_w3_from_data, eval_w4_from_data};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown basis tag {0:?}")]
    UnknownBasis(String),
    #[error("dataset holds no records")]
    EmptyDataset,
    #[error("duplicate setting row {0}")]
    DuplicateLabel(String),
    #[error("required setting row {0} is missing")]
    MissingRow(String),
    #[error("conditioned slice of row {0} has zero total counts")]
    ZeroConditionedTotal(String),
    #[error("party index {0} out of range for four-party records")]
    BadParty(usize),
    #[error("Monte Carlo needs at least 1000 resamples, got {0}")]
    TooFewResamples(usize),
    #[error("record has zero total counts")]
    ZeroTotal,
}

/// The bundled reference dataset: the paper's raw-count table, nine settings
/// by sixteen coincidence counters.
pub fn bundled_table1() -> ExperimentDataset {
    parse_dataset(include_str!("../../data/table1.csv"), "bundled-table1")
        .expect("bundled dataset parses")
}
