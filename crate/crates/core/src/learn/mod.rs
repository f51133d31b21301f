//! Parameter learning: counting on complete data and EM on incomplete data.

mod counting;
mod em;
mod init;
mod noisy_or_fit;
mod records;
mod stats;

use thiserror::Error;

use crate::bn::BnError;

pub use counting::ml_counting;
pub use em::{em_learn, Initialization, LearnConfig, LearnResult};
pub use init::initialize_parameters;
pub use records::{Provenance, Record, RecordSet, PROVENANCE_COLUMN};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error("invalid learning configuration: {0}")]
    InvalidConfig(String),
    #[error("record {index} is incomplete: {variable} is missing")]
    IncompleteRecord { index: usize, variable: String },
    #[error("record {index} has probability zero under the current parameters")]
    ImpossibleRecord { index: usize },
    #[error("record file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Inference(#[from] BnError),
}

impl LearnError {
    pub fn code(&self) -> &'static str {
        match self {
            LearnError::InvalidStructure(_) => "invalid-structure",
            LearnError::InvalidConfig(_) => "invalid-config",
            LearnError::IncompleteRecord { .. } => "incomplete-record",
            LearnError::ImpossibleRecord { .. } => "impossible-record",
            LearnError::Format { .. } | LearnError::Csv(_) => "record-format-error",
            LearnError::Io(_) => "io-error",
            LearnError::Inference(e) => e.code(),
        }
    }
}
