use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::chart::{ChartDescription, ChartSeries};
use super::{AnalyticsError, DefectRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoEntry {
    pub category: String,
    pub count: usize,
    pub share: f64,
    pub cumulative_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoResult {
    pub total: usize,
    pub entries: Vec<ParetoEntry>,
}

impl ParetoResult {
    /// Cumulative share after the first `k` entries.
    pub fn cumulative(&self, k: usize) -> f64 {
        match k {
            0 => 0.0,
            k => self.entries[k.min(self.entries.len()) - 1].cumulative_share,
        }
    }

    pub fn chart(&self, title: &str) -> ChartDescription {
        ChartDescription {
            kind: "pareto".into(),
            title: title.into(),
            x_labels: self.entries.iter().map(|e| e.category.clone()).collect(),
            series: vec![
                ChartSeries::new(
                    "count",
                    self.entries.iter().map(|e| e.count as f64).collect(),
                ),
                ChartSeries::new(
                    "cumulative_share",
                    self.entries.iter().map(|e| e.cumulative_share).collect(),
                ),
            ],
            center_line: None,
            flagged: vec![false; self.entries.len()],
        }
    }
}

/// Pareto ordering of arbitrary category counts. Zero counts are dropped.
pub fn pareto_counts(counts: &BTreeMap<String, usize>) -> Result<ParetoResult, AnalyticsError> {
    let total: usize = counts.values().sum();
    if total == 0 {
        return Err(AnalyticsError::EmptySample);
    }
    let mut items: Vec<(&String, usize)> = counts
        .iter()
        .filter(|(_, c)| **c > 0)
        .map(|(k, c)| (k, *c))
        .collect();
    items.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let mut running = 0;
    let n = items.len();
    let entries = items
        .into_iter()
        .enumerate()
        .map(|(i, (category, count))| {
            running += count;
            ParetoEntry {
                category: category.clone(),
                count,
                share: count as f64 / total as f64,
                // The last entry is exactly 1 regardless of rounding.
                cumulative_share: if i + 1 == n {
                    1.0
                } else {
                    running as f64 / total as f64
                },
            }
        })
        .collect();
    Ok(ParetoResult { total, entries })
}

/// Pareto chart of defects by nature.
pub fn pareto(defects: &[DefectRecord]) -> Result<ParetoResult, AnalyticsError> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for d in defects {
        *counts.entry(d.nature.label().to_string()).or_default() += 1;
    }
    pareto_counts(&counts)
}
