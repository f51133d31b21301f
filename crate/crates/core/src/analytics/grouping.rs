use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{AnalyticsError, DefectNature, DefectRecord};

/// A cluster of defects produced by the same underlying error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystematicError {
    pub id: String,
    pub label: String,
    pub defect_category: DefectNature,
    pub iteration_id: String,
    pub members: Vec<String>,
}

impl SystematicError {
    pub fn member_count(&self) -> usize {
        self.members.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupOutcome {
    pub error: SystematicError,
    pub warnings: Vec<String>,
}

/// Checks a candidate grouping against the defect list.
pub fn group_defects(
    defects: &[DefectRecord],
    candidate: SystematicError,
) -> Result<GroupOutcome, AnalyticsError> {
    let by_id: BTreeMap<&str, &DefectRecord> = defects.iter().map(|d| (d.id.as_str(), d)).collect();
    let mut seen = BTreeSet::new();
    let mut warnings = Vec::new();
    for m in &candidate.members {
        if !seen.insert(m.as_str()) {
            return Err(AnalyticsError::DuplicateId(m.clone()));
        }
        let d = by_id
            .get(m.as_str())
            .ok_or_else(|| AnalyticsError::UnknownDefect(m.clone()))?;
        if d.iteration_id != candidate.iteration_id {
            return Err(AnalyticsError::CrossIterationMember {
                defect: m.clone(),
                expected: candidate.iteration_id.clone(),
                found: d.iteration_id.clone(),
            });
        }
        if d.nature != candidate.defect_category {
            warnings.push(format!(
                "defect {m} is {} but the group is {}",
                d.nature, candidate.defect_category
            ));
        }
    }
    if candidate.members.is_empty() {
        warnings.push(format!(
            "systematic error {} has no member defects",
            candidate.id
        ));
    }
    Ok(GroupOutcome {
        error: candidate,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetailCount {
    pub tag: String,
    pub count: usize,
}

/// Tag counts, descending with ties by tag, keeping tags seen at least
/// `min_count` times. Untagged defects are skipped.
pub fn detail_histogram(
    defects: &[DefectRecord],
    nature: Option<DefectNature>,
    min_count: usize,
) -> Vec<DetailCount> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for d in defects
        .iter()
        .filter(|d| nature.is_none_or(|n| d.nature == n))
    {
        if let Some(tag) = &d.detail_tag {
            *counts.entry(tag.as_str()).or_default() += 1;
        }
    }
    let mut out: Vec<DetailCount> = counts
        .into_iter()
        .filter(|(_, c)| *c >= min_count)
        .map(|(tag, count)| DetailCount {
            tag: tag.to_string(),
            count,
        })
        .collect();
    out.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.tag.cmp(&b.tag)));
    out
}
