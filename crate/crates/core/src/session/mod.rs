//! DCA meeting workflow.
//!
//! A [`Session`] walks the six steps of a causal analysis meeting: select a
//! defect sample, classify it, group systematic errors, determine their
//! causes with diagnostic support, propose actions and document the result.
//! Completed sessions feed [`contribute_and_retrain`], which appends
//! within-company citations and learns a child [`ModelVersion`].

mod report;
mod state;
mod version;

use thiserror::Error;

use crate::analytics::AnalyticsError;
use crate::learn::LearnError;
use crate::model::ModelError;

pub use report::{
    generate_report, CauseEntry, CauseSection, ClassificationSection, Report, SampleSection,
    SystematicErrorEntry, REPORT_FORMAT, REPORT_FORMAT_VERSION,
};
pub use state::{
    create_session, ActionProposal, ActionStatus, CauseRef, Classification, DeterminedCause,
    DiagnosticQuery, IterationChart, Session, Step,
};
pub use version::{
    contribute_and_retrain, learn_with_restarts, session_citations, train_version, LearnMetadata,
    ModelVersion, RetrainConfig,
};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("unknown model version {0}")]
    UnknownVersion(String),
    #[error("cannot move from {from} to {to}: steps may not be skipped")]
    StepSkip { from: Step, to: Step },
    #[error("cannot enter {step}: {reason}")]
    GateUnsatisfied { step: Step, reason: String },
    #[error("{operation} is not allowed in step {step}")]
    WrongStep { operation: &'static str, step: Step },
    #[error("bad reference: {0}")]
    BadReference(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("action status cannot change from {from} to {to}")]
    IllegalStatusTransition {
        from: ActionStatus,
        to: ActionStatus,
    },
    #[error("session {session} has a free-text cause \"{text}\" that is not in the model")]
    UnmappedFreeTextCause { session: String, text: String },
    #[error("session {session} has cause {cause} without a problem")]
    CauseWithoutProblem { session: String, cause: String },
    #[error("session {0} has not reached the document step")]
    SessionIncomplete(String),
    #[error("session {session} belongs to version {found}, not {expected}")]
    VersionMismatch {
        session: String,
        expected: String,
        found: String,
    },
    #[error("record set fingerprint {found} does not match version {expected}")]
    RecordsMismatch { expected: String, found: String },
    #[error("session revision is {actual}, request was based on {expected}")]
    Conflict { expected: u64, actual: u64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error("learning failed: {0}")]
    Learn(#[from] LearnError),
}

impl SessionError {
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::UnknownVersion(_) => "unknown-version",
            SessionError::StepSkip { .. } => "step-skip",
            SessionError::GateUnsatisfied { .. } => "gate-unsatisfied",
            SessionError::WrongStep { .. } => "wrong-step",
            SessionError::BadReference(_) => "bad-reference",
            SessionError::InvalidInput(_) => "invalid-input",
            SessionError::IllegalStatusTransition { .. } => "illegal-status-transition",
            SessionError::UnmappedFreeTextCause { .. } => "unmapped-free-text-cause",
            SessionError::CauseWithoutProblem { .. } => "cause-without-problem",
            SessionError::SessionIncomplete(_) => "session-incomplete",
            SessionError::VersionMismatch { .. } => "version-mismatch",
            SessionError::RecordsMismatch { .. } => "records-mismatch",
            SessionError::Conflict { .. } => "conflict",
            SessionError::Model(e) => e.code(),
            SessionError::Analytics(e) => e.code(),
            SessionError::Learn(_) => "learn-failure",
        }
    }
}
