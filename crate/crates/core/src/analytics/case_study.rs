//! Three-iteration inspection data set whose totals match the published
//! case study. Per-defect placement and tags beyond the published counts
//! are synthetic.

use super::{
    assemble_stats, read_defects, read_effort, read_units, DefectNature, DefectRecord,
    IterationStats, SystematicError,
};

pub const CASE_STUDY_DEFECTS_CSV: &str = include_str!("../../data/case_study/defects.csv");
pub const CASE_STUDY_UNITS_CSV: &str = include_str!("../../data/case_study/units.csv");
pub const CASE_STUDY_EFFORT_CSV: &str = include_str!("../../data/case_study/effort.csv");

pub fn case_study_defects() -> Vec<DefectRecord> {
    read_defects(CASE_STUDY_DEFECTS_CSV.as_bytes()).expect("shipped defects are valid")
}

pub fn case_study_stats() -> Vec<IterationStats> {
    let units = read_units(CASE_STUDY_UNITS_CSV.as_bytes()).expect("shipped units are valid");
    let effort = read_effort(CASE_STUDY_EFFORT_CSV.as_bytes()).expect("shipped effort is valid");
    assemble_stats(&units, &effort).expect("shipped stats are consistent")
}

// (iteration, nature, detail tag, systematic error label)
const GROUPINGS: [(&str, DefectNature, &str, &str); 9] = [
    (
        "EL1",
        DefectNature::Ambiguity,
        "Underspecified requirement",
        "Underspecifying Reqs.",
    ),
    (
        "EL1",
        DefectNature::Omission,
        "Link between use cases",
        "Omitting links to between use cases",
    ),
    (
        "EL2",
        DefectNature::Omission,
        "Link to business rules",
        "Omitting links to Business Rules",
    ),
    (
        "EL2",
        DefectNature::Omission,
        "Business rules",
        "Omitting details of Business Rules",
    ),
    (
        "EL2",
        DefectNature::IncorrectFact,
        "Linking the wrong business rule",
        "Linking Business Rules incorrectly",
    ),
    (
        "EL3",
        DefectNature::Omission,
        "Business rules",
        "Omitting details of Business Rules",
    ),
    (
        "EL3",
        DefectNature::Omission,
        "Link to business rules",
        "Omitting links to Business Rules",
    ),
    (
        "EL3",
        DefectNature::IncorrectFact,
        "Wrong understanding (comm. problem)",
        "Incorrect facts due to comm. prob.",
    ),
    (
        "EL3",
        DefectNature::IncorrectFact,
        "Linking the wrong business rule",
        "Linking Business Rules incorrectly",
    ),
];

/// The main systematic errors per iteration, members selected by tag.
pub fn case_study_groupings(defects: &[DefectRecord]) -> Vec<SystematicError> {
    GROUPINGS
        .iter()
        .enumerate()
        .map(|(i, (iteration, nature, tag, label))| SystematicError {
            id: format!("SE{}", i + 1),
            label: label.to_string(),
            defect_category: *nature,
            iteration_id: iteration.to_string(),
            members: defects
                .iter()
                .filter(|d| {
                    d.iteration_id == *iteration
                        && d.nature == *nature
                        && d.detail_tag.as_deref() == Some(tag)
                })
                .map(|d| d.id.clone())
                .collect(),
        })
        .collect()
}
