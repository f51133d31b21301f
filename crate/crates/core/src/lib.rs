//! Defect causal analysis workbench core.
//!
//! - [`bn`]: discrete Bayesian networks with exact inference.
//! - [`learn`]: counting and EM parameter learning.
//! - [`model`]: cause-effect domain models compiled to networks.
//! - [`analytics`]: inspection defect data, Pareto and U-charts.
//! - [`session`]: the six-step DCA meeting workflow and retraining.

pub mod analytics;
pub mod bn;
pub mod learn;
pub mod model;
pub mod session;
