use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::compile::CompiledModel;
use super::schema::{CauseEffectModel, EntityKind};
use super::ModelError;
use crate::bn::{FALSE, TRUE};
use crate::learn::{Provenance, Record, RecordSet, PROVENANCE_COLUMN};

pub const PROBLEM_COLUMN: &str = "problem";

/// One respondent's citation of a problem with its causes and effects.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CitationRecord {
    pub problem_id: String,
    pub cited_causes: BTreeSet<String>,
    /// `None` when the source did not report effects at all.
    pub cited_effects: Option<BTreeSet<String>>,
    pub source: Provenance,
}

impl CitationRecord {
    pub fn new(problem_id: &str, causes: &[&str], effects: &[&str], source: Provenance) -> Self {
        Self {
            problem_id: problem_id.to_string(),
            cited_causes: causes.iter().map(|c| c.to_string()).collect(),
            cited_effects: Some(effects.iter().map(|e| e.to_string()).collect()),
            source,
        }
    }

    pub fn validate(&self, model: &CauseEffectModel) -> Result<(), ModelError> {
        let expect = |id: &str, kind: EntityKind| {
            if model.kind_of(id) == Some(kind) {
                Ok(())
            } else {
                Err(ModelError::UnknownId(id.to_string()))
            }
        };
        expect(&self.problem_id, EntityKind::Problem)?;
        for c in &self.cited_causes {
            expect(c, EntityKind::Cause)?;
        }
        for e in self.cited_effects.iter().flatten() {
            expect(e, EntityKind::Effect)?;
        }
        Ok(())
    }
}

fn flag(on: bool) -> String {
    (if on { TRUE } else { FALSE }).to_string()
}

/// Converts citations to learning records over the compiled network.
///
/// The cited problem is true and the others are missing. Causes and
/// effects are true when cited and false otherwise. Category variables
/// stay missing.
pub fn records_to_assignments(
    model: &CauseEffectModel,
    compiled: &CompiledModel,
    records: &[CitationRecord],
) -> Result<RecordSet, ModelError> {
    let columns = compiled
        .network
        .variables
        .iter()
        .map(|v| v.id.clone())
        .collect();
    let mut set = RecordSet::new(columns);
    for record in records {
        record.validate(model)?;
        let mut assignment = BTreeMap::new();
        assignment.insert(
            compiled.node(&record.problem_id)?.to_string(),
            TRUE.to_string(),
        );
        for cause in &model.causes {
            let on = record.cited_causes.contains(&cause.id);
            assignment.insert(compiled.node(&cause.id)?.to_string(), flag(on));
        }
        if let Some(effects) = &record.cited_effects {
            for effect in &model.effects {
                let on = effects.contains(&effect.id);
                assignment.insert(compiled.node(&effect.id)?.to_string(), flag(on));
            }
        }
        set.push(Record::new(assignment, record.source));
    }
    Ok(set)
}

/// Inverse of [`records_to_assignments`].
pub fn decode_assignments(
    model: &CauseEffectModel,
    compiled: &CompiledModel,
    set: &RecordSet,
) -> Result<Vec<CitationRecord>, ModelError> {
    let mut out = Vec::with_capacity(set.len());
    for (index, record) in set.records.iter().enumerate() {
        let bad = |message: String| ModelError::Format {
            line: index + 2,
            message,
        };
        let is_true = |id: &str| -> Result<Option<bool>, ModelError> {
            let node = compiled.node(id)?;
            Ok(record.assignment.get(node).map(|s| s == TRUE))
        };
        let mut problem = None;
        for p in &model.problems {
            if is_true(&p.id)? == Some(true) {
                if problem.is_some() {
                    return Err(bad("more than one problem is true".into()));
                }
                problem = Some(p.id.clone());
            }
        }
        let problem_id = problem.ok_or_else(|| bad("no problem is true".into()))?;
        let mut cited_causes = BTreeSet::new();
        for c in &model.causes {
            if is_true(&c.id)? == Some(true) {
                cited_causes.insert(c.id.clone());
            }
        }
        let mut reported = false;
        let mut effects = BTreeSet::new();
        for e in &model.effects {
            if let Some(on) = is_true(&e.id)? {
                reported = true;
                if on {
                    effects.insert(e.id.clone());
                }
            }
        }
        out.push(CitationRecord {
            problem_id,
            cited_causes,
            cited_effects: reported.then_some(effects),
            source: record.provenance,
        });
    }
    Ok(out)
}

/// Writes the citation sheet: a problem column, one 0/1 column per cause
/// and per effect, and a provenance column.
pub fn write_citations<W: Write>(
    model: &CauseEffectModel,
    records: &[CitationRecord],
    writer: W,
) -> Result<(), ModelError> {
    let io = |e: csv::Error| ModelError::Format {
        line: 0,
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![PROBLEM_COLUMN.to_string()];
    header.extend(model.causes.iter().map(|c| c.id.clone()));
    header.extend(model.effects.iter().map(|e| e.id.clone()));
    header.push(PROVENANCE_COLUMN.to_string());
    w.write_record(&header).map_err(io)?;
    for r in records {
        r.validate(model)?;
        let mut row = vec![r.problem_id.clone()];
        row.extend(
            model
                .causes
                .iter()
                .map(|c| bit(r.cited_causes.contains(&c.id))),
        );
        row.extend(model.effects.iter().map(|e| match &r.cited_effects {
            Some(set) => bit(set.contains(&e.id)),
            None => String::new(),
        }));
        row.push(r.source.as_str().to_string());
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| ModelError::Format {
        line: 0,
        message: e.to_string(),
    })?;
    Ok(())
}

fn bit(on: bool) -> String {
    (if on { "1" } else { "0" }).to_string()
}

/// Reads a citation sheet. Every cause and effect of the model must have
/// a column; the provenance column is optional.
pub fn read_citations<R: Read>(
    model: &CauseEffectModel,
    reader: R,
    default_source: Provenance,
) -> Result<Vec<CitationRecord>, ModelError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| ModelError::Format {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let position = |name: &str| header.iter().position(|h| h == name);
    let problem_col = position(PROBLEM_COLUMN).ok_or_else(|| ModelError::Format {
        line: 1,
        message: format!("missing {PROBLEM_COLUMN} column"),
    })?;
    for h in &header {
        let known = h == PROBLEM_COLUMN
            || h == PROVENANCE_COLUMN
            || matches!(
                model.kind_of(h),
                Some(EntityKind::Cause | EntityKind::Effect)
            );
        if !known {
            return Err(ModelError::UnknownId(h.clone()));
        }
    }
    let lookup = |ids: Vec<&String>| -> Result<Vec<(String, usize)>, ModelError> {
        ids.into_iter()
            .map(|id| {
                position(id)
                    .map(|i| (id.clone(), i))
                    .ok_or_else(|| ModelError::Format {
                        line: 1,
                        message: format!("missing column {id}"),
                    })
            })
            .collect()
    };
    let cause_cols = lookup(model.causes.iter().map(|c| &c.id).collect())?;
    let effect_cols = lookup(model.effects.iter().map(|e| &e.id).collect())?;
    let prov_col = position(PROVENANCE_COLUMN);

    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| ModelError::Format {
            line,
            message: e.to_string(),
        })?;
        let cell = |col: usize| row.get(col).unwrap_or("");
        let parse_bit = |col: usize, id: &str| -> Result<Option<bool>, ModelError> {
            match cell(col) {
                "1" => Ok(Some(true)),
                "0" => Ok(Some(false)),
                "" => Ok(None),
                other => Err(ModelError::Format {
                    line,
                    message: format!("{id}: expected 0 or 1, found {other:?}"),
                }),
            }
        };
        let mut cited_causes = BTreeSet::new();
        for (id, col) in &cause_cols {
            match parse_bit(*col, id)? {
                Some(true) => {
                    cited_causes.insert(id.clone());
                }
                Some(false) => {}
                None => {
                    return Err(ModelError::Format {
                        line,
                        message: format!("{id}: cause cells must be 0 or 1"),
                    })
                }
            }
        }
        let mut effects = BTreeSet::new();
        let mut blanks = 0;
        for (id, col) in &effect_cols {
            match parse_bit(*col, id)? {
                Some(true) => {
                    effects.insert(id.clone());
                }
                Some(false) => {}
                None => blanks += 1,
            }
        }
        let cited_effects = if effect_cols.is_empty() {
            None
        } else if blanks == 0 {
            Some(effects)
        } else if blanks == effect_cols.len() {
            None
        } else {
            return Err(ModelError::Format {
                line,
                message: "effect cells must be all blank or all 0/1".into(),
            });
        };
        let source = match prov_col.map(cell) {
            None | Some("") => default_source,
            Some(p) => Provenance::parse(p).ok_or_else(|| ModelError::Format {
                line,
                message: format!("unknown provenance {p:?}"),
            })?,
        };
        let record = CitationRecord {
            problem_id: cell(problem_col).to_string(),
            cited_causes,
            cited_effects,
            source,
        };
        record.validate(model)?;
        out.push(record);
    }
    Ok(out)
}
