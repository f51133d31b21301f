use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;

/// Closed defect taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DefectNature {
    #[serde(rename = "ambiguity")]
    Ambiguity,
    #[serde(rename = "extraneous information")]
    ExtraneousInformation,
    #[serde(rename = "inconsistent information")]
    InconsistentInformation,
    #[serde(rename = "incorrect fact")]
    IncorrectFact,
    #[serde(rename = "omission")]
    Omission,
}

impl DefectNature {
    pub const ALL: [DefectNature; 5] = [
        DefectNature::Ambiguity,
        DefectNature::ExtraneousInformation,
        DefectNature::InconsistentInformation,
        DefectNature::IncorrectFact,
        DefectNature::Omission,
    ];

    pub fn label(self) -> &'static str {
        match self {
            DefectNature::Ambiguity => "ambiguity",
            DefectNature::ExtraneousInformation => "extraneous information",
            DefectNature::InconsistentInformation => "inconsistent information",
            DefectNature::IncorrectFact => "incorrect fact",
            DefectNature::Omission => "omission",
        }
    }
}

impl fmt::Display for DefectNature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for DefectNature {
    type Err = AnalyticsError;

    /// Accepts the label in any case, with `-` or `_` for spaces.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_lowercase().replace(['-', '_'], " ");
        DefectNature::ALL
            .into_iter()
            .find(|n| n.label() == norm)
            .ok_or_else(|| AnalyticsError::UnknownNature(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectRecord {
    pub id: String,
    pub iteration_id: String,
    pub unit_id: String,
    pub nature: DefectNature,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub detail_tag: Option<String>,
    #[serde(default)]
    pub systematic_error_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitSize {
    pub unit_id: String,
    pub size_fp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iteration_id: String,
    pub units: Vec<UnitSize>,
    pub inspection_effort_hours: f64,
}

impl IterationStats {
    pub fn validate(&self) -> Result<(), AnalyticsError> {
        if self.units.is_empty() {
            return Err(AnalyticsError::InvalidStats(format!(
                "iteration {} has no units",
                self.iteration_id
            )));
        }
        let mut seen = BTreeSet::new();
        for u in &self.units {
            if !seen.insert(u.unit_id.as_str()) {
                return Err(AnalyticsError::DuplicateId(u.unit_id.clone()));
            }
            if !(u.size_fp > 0.0 && u.size_fp.is_finite()) {
                return Err(AnalyticsError::InvalidStats(format!(
                    "unit {} has size {}",
                    u.unit_id, u.size_fp
                )));
            }
        }
        if !(self.inspection_effort_hours > 0.0 && self.inspection_effort_hours.is_finite()) {
            return Err(AnalyticsError::InvalidStats(format!(
                "iteration {} has effort {}",
                self.iteration_id, self.inspection_effort_hours
            )));
        }
        Ok(())
    }

    pub fn total_size(&self) -> f64 {
        self.units.iter().map(|u| u.size_fp).sum()
    }

    pub fn size_of(&self, unit_id: &str) -> Option<f64> {
        self.units
            .iter()
            .find(|u| u.unit_id == unit_id)
            .map(|u| u.size_fp)
    }

    /// Defects of this iteration, checking that each names a known unit.
    pub fn defects_of<'a>(
        &self,
        defects: &'a [DefectRecord],
    ) -> Result<Vec<&'a DefectRecord>, AnalyticsError> {
        let mine: Vec<&DefectRecord> = defects
            .iter()
            .filter(|d| d.iteration_id == self.iteration_id)
            .collect();
        for d in &mine {
            if self.size_of(&d.unit_id).is_none() {
                return Err(AnalyticsError::UnknownUnit {
                    unit: d.unit_id.clone(),
                    iteration: self.iteration_id.clone(),
                });
            }
        }
        Ok(mine)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRow {
    pub iteration: String,
    pub unit: String,
    pub size_fp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffortRow {
    pub iteration: String,
    pub hours: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct DefectRow {
    id: String,
    iteration: String,
    unit: String,
    nature: String,
    #[serde(default)]
    detail_tag: String,
    #[serde(default)]
    description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    systematic_error: Option<String>,
}

fn format_err(line: usize, e: impl fmt::Display) -> AnalyticsError {
    AnalyticsError::Format {
        line,
        message: e.to_string(),
    }
}

fn non_empty(s: String) -> Option<String> {
    if s.is_empty() {
        None
    } else {
        Some(s)
    }
}

/// Reads the defect file: `id, iteration, unit, nature, detail_tag,
/// description` with an optional `systematic_error` column.
pub fn read_defects<R: Read>(reader: R) -> Result<Vec<DefectRecord>, AnalyticsError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    for (i, row) in rdr.deserialize::<DefectRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| format_err(line, e))?;
        let nature = row.nature.parse().map_err(|e| format_err(line, e))?;
        if !ids.insert(row.id.clone()) {
            return Err(AnalyticsError::DuplicateId(row.id));
        }
        out.push(DefectRecord {
            id: row.id,
            iteration_id: row.iteration,
            unit_id: row.unit,
            nature,
            description: row.description,
            detail_tag: non_empty(row.detail_tag),
            systematic_error_id: row.systematic_error.and_then(non_empty),
        });
    }
    Ok(out)
}

pub fn write_defects<W: Write>(defects: &[DefectRecord], writer: W) -> Result<(), AnalyticsError> {
    let mut w = csv::Writer::from_writer(writer);
    let grouped = defects.iter().any(|d| d.systematic_error_id.is_some());
    let mut header = vec![
        "id",
        "iteration",
        "unit",
        "nature",
        "detail_tag",
        "description",
    ];
    if grouped {
        header.push("systematic_error");
    }
    w.write_record(&header).map_err(|e| format_err(0, e))?;
    for d in defects {
        let mut row = vec![
            d.id.as_str(),
            d.iteration_id.as_str(),
            d.unit_id.as_str(),
            d.nature.label(),
            d.detail_tag.as_deref().unwrap_or(""),
            d.description.as_str(),
        ];
        if grouped {
            row.push(d.systematic_error_id.as_deref().unwrap_or(""));
        }
        w.write_record(&row).map_err(|e| format_err(0, e))?;
    }
    w.flush().map_err(|e| format_err(0, e))
}

/// Reads `iteration, unit, size_fp` rows.
pub fn read_units<R: Read>(reader: R) -> Result<Vec<UnitRow>, AnalyticsError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| format_err(i + 2, e)))
        .collect()
}

/// Reads `iteration, hours` rows.
pub fn read_effort<R: Read>(reader: R) -> Result<Vec<EffortRow>, AnalyticsError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| format_err(i + 2, e)))
        .collect()
}

/// Joins unit and effort rows into validated per-iteration statistics,
/// ordered by iteration id.
pub fn assemble_stats(
    units: &[UnitRow],
    effort: &[EffortRow],
) -> Result<Vec<IterationStats>, AnalyticsError> {
    let mut by_iteration: BTreeMap<&str, Vec<UnitSize>> = BTreeMap::new();
    for u in units {
        by_iteration
            .entry(&u.iteration)
            .or_default()
            .push(UnitSize {
                unit_id: u.unit.clone(),
                size_fp: u.size_fp,
            });
    }
    let mut hours: BTreeMap<&str, f64> = BTreeMap::new();
    for e in effort {
        if hours.insert(&e.iteration, e.hours).is_some() {
            return Err(AnalyticsError::DuplicateId(e.iteration.clone()));
        }
    }
    let mut out = Vec::new();
    for (iteration, units) in by_iteration {
        let h = *hours.get(iteration).ok_or_else(|| {
            AnalyticsError::InvalidStats(format!("no effort row for {iteration}"))
        })?;
        let stats = IterationStats {
            iteration_id: iteration.to_string(),
            units,
            inspection_effort_hours: h,
        };
        stats.validate()?;
        out.push(stats);
    }
    if let Some(extra) = hours
        .keys()
        .find(|k| !out.iter().any(|s| s.iteration_id == **k))
    {
        return Err(AnalyticsError::UnknownIteration(extra.to_string()));
    }
    Ok(out)
}
