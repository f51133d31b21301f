//! Inspection defect data and statistical process control analytics.

mod case_study;
mod chart;
mod defects;
mod grouping;
mod metrics;
mod pareto;
mod uchart;

use thiserror::Error;

pub use case_study::{
    case_study_defects, case_study_groupings, case_study_stats, CASE_STUDY_DEFECTS_CSV,
    CASE_STUDY_EFFORT_CSV, CASE_STUDY_UNITS_CSV,
};
pub use chart::{ChartDescription, ChartSeries};
pub use defects::{
    assemble_stats, read_defects, read_effort, read_units, write_defects, DefectNature,
    DefectRecord, EffortRow, IterationStats, UnitRow, UnitSize,
};
pub use grouping::{detail_histogram, group_defects, DetailCount, GroupOutcome, SystematicError};
pub use metrics::{defect_density, inspection_efficiency};
pub use pareto::{pareto, pareto_counts, ParetoEntry, ParetoResult};
pub use uchart::{u_chart, u_chart_per_hour, UChartPoint, UChartResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("no defects in the sample")]
    EmptySample,
    #[error("unknown defect nature {0:?}")]
    UnknownNature(String),
    #[error("unit {unit} is not part of iteration {iteration}")]
    UnknownUnit { unit: String, iteration: String },
    #[error("unknown iteration {0}")]
    UnknownIteration(String),
    #[error("unknown defect {0}")]
    UnknownDefect(String),
    #[error("defect {defect} belongs to iteration {found}, not {expected}")]
    CrossIterationMember {
        defect: String,
        expected: String,
        found: String,
    },
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("invalid iteration statistics: {0}")]
    InvalidStats(String),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

impl AnalyticsError {
    pub fn code(&self) -> &'static str {
        match self {
            AnalyticsError::EmptySample => "empty-sample",
            AnalyticsError::UnknownNature(_) => "unknown-nature",
            AnalyticsError::UnknownUnit { .. } => "unknown-unit",
            AnalyticsError::UnknownIteration(_) => "unknown-iteration",
            AnalyticsError::UnknownDefect(_) => "unknown-defect",
            AnalyticsError::CrossIterationMember { .. } => "cross-iteration-member",
            AnalyticsError::DuplicateId(_) => "duplicate-id",
            AnalyticsError::InvalidStats(_) => "invalid-stats",
            AnalyticsError::Format { .. } => "format-error",
        }
    }
}
