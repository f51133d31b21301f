//! Discrete Bayesian networks: representation, validation and exact inference.

mod clique_tree;
mod elimination;
mod enumerate;
mod factor;
mod io;
mod likelihood;
mod network;
mod noisy_or;
mod validate;

use thiserror::Error;

pub use elimination::{
    min_degree_order, min_degree_plan, posterior, posterior_traced, posterior_with_order,
    EliminationStep, EliminationTrace,
};
pub use enumerate::{enumerate_posterior, MAX_JOINT_CONFIGURATIONS};
pub use factor::Factor;
pub use io::{parse_network, serialize_network, NETWORK_FORMAT, NETWORK_FORMAT_VERSION};
pub use likelihood::log_likelihood;
pub use network::{Cpd, Cpt, EvidenceSet, Network, NoisyOrCpd, Variable, FALSE, TRUE};
pub use noisy_or::{expand_noisy_or, MAX_NOISY_OR_PARENTS};
pub use validate::{validate_network, Finding, FindingKind, ValidationReport, ROW_SUM_TOLERANCE};

pub(crate) use clique_tree::CliqueTree;
pub(crate) use elimination::Engine;
pub(crate) use network::Layout;
pub(crate) use noisy_or::parent_active;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BnError {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("variable {variable} has no state {state}")]
    UnknownState { variable: String, state: String },
    #[error("evidence has probability zero under the model")]
    EvidenceInconsistent,
    #[error("joint state space of {configurations} configurations exceeds the limit of {limit}")]
    StateSpaceTooLarge { configurations: u128, limit: u128 },
    #[error("{variable} has {parents} noisy-OR parents, at most {max} can be expanded")]
    TooManyParents {
        variable: String,
        parents: usize,
        max: usize,
    },
    #[error("malformed network document: {0}")]
    Parse(String),
    #[error("unsupported network document version {0}")]
    UnsupportedVersion(u32),
}

impl BnError {
    pub fn code(&self) -> &'static str {
        match self {
            BnError::InvalidNetwork(_) => "invalid-network",
            BnError::UnknownVariable(_) => "unknown-variable",
            BnError::UnknownState { .. } => "unknown-state",
            BnError::EvidenceInconsistent => "evidence-inconsistent",
            BnError::StateSpaceTooLarge { .. } => "state-space-too-large",
            BnError::TooManyParents { .. } => "too-many-parents",
            BnError::Parse(_) => "network-parse-error",
            BnError::UnsupportedVersion(_) => "unsupported-version",
        }
    }
}
