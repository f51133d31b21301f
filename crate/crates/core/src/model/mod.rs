//! Cause-effect domain models and their compilation to Bayesian networks.

mod citations;
mod compile;
mod diagnose;
mod sample;
mod schema;

use thiserror::Error;

use crate::bn::BnError;

pub use citations::{
    decode_assignments, read_citations, records_to_assignments, write_citations, CitationRecord,
    PROBLEM_COLUMN,
};
pub use compile::{compile, CompileParameters, CompiledModel};
pub use diagnose::{diagnose, DiagnosisView, RankedCategory, RankedCause};
pub use sample::{
    sample_citations, sample_model, synthetic_citations, SAMPLE_CITATIONS_CSV, SAMPLE_MODEL_JSON,
    SAMPLE_SEED,
};
pub use schema::{
    parse_model, Category, CauseEffectModel, Entity, EntityKind, MODEL_FORMAT, MODEL_FORMAT_VERSION,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("malformed model document: {0}")]
    Parse(String),
    #[error("model has no problems")]
    NoProblems,
    #[error("empty id")]
    EmptyId,
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("{kind} {id} belongs to categories {} and {}", categories[0], categories[1])]
    MultipleCategories {
        kind: &'static str,
        id: String,
        categories: [String; 2],
    },
    #[error("category {category} references unknown member {member}")]
    OrphanMemberReference { category: String, member: String },
    #[error("{kind} {id} belongs to no category")]
    Uncategorized { kind: &'static str, id: String },
    #[error("unknown id {0}")]
    UnknownId(String),
    #[error("evidence on {0}, which is not a cause")]
    EvidenceNotOnCause(String),
    #[error("trained network does not match the compiled structure: {0}")]
    StructureMismatch(String),
    #[error("citation file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Inference(#[from] BnError),
}

impl ModelError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::Parse(_) => "parse-error",
            ModelError::NoProblems => "no-problems",
            ModelError::EmptyId => "empty-id",
            ModelError::DuplicateId(_) => "duplicate-id",
            ModelError::MultipleCategories { kind: "cause", .. } => "cause-in-multiple-categories",
            ModelError::MultipleCategories { .. } => "effect-in-multiple-categories",
            ModelError::OrphanMemberReference { .. } => "orphan-member-reference",
            ModelError::Uncategorized { .. } => "uncategorized-member",
            ModelError::UnknownId(_) => "unknown-id",
            ModelError::EvidenceNotOnCause(_) => "evidence-not-on-cause",
            ModelError::StructureMismatch(_) => "structure-mismatch",
            ModelError::Format { .. } => "format-error",
            ModelError::Inference(BnError::EvidenceInconsistent) => "evidence-inconsistent",
            ModelError::Inference(_) => "inference-error",
        }
    }
}
