//! Learning records: partial assignments with provenance, and their CSV form.
//!
//! The CSV layout is one header row of variable ids followed by one row per
//! record; a cell holds a state label, or is empty when the value is missing.
//! An optional column named `provenance` carries the record's origin.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::LearnError;
use crate::bn::{BnError, Layout, Network};

/// Reserved CSV column holding the provenance tag.
pub const PROVENANCE_COLUMN: &str = "provenance";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    CrossCompany,
    WithinCompany,
    Synthetic,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::CrossCompany => "cross-company",
            Provenance::WithinCompany => "within-company",
            Provenance::Synthetic => "synthetic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cross-company" => Some(Provenance::CrossCompany),
            "within-company" => Some(Provenance::WithinCompany),
            "synthetic" => Some(Provenance::Synthetic),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    /// Observed values; variables absent from the map are missing.
    pub assignment: BTreeMap<String, String>,
    pub provenance: Provenance,
}

impl Record {
    pub fn new(assignment: BTreeMap<String, String>, provenance: Provenance) -> Self {
        Self {
            assignment,
            provenance,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordSet {
    /// Column order used when writing CSV.
    pub columns: Vec<String>,
    pub records: Vec<Record>,
}

impl RecordSet {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            records: Vec::new(),
        }
    }

    /// Record set whose columns are the sorted union of assigned variables.
    pub fn from_records(records: Vec<Record>) -> Self {
        let mut columns: Vec<String> = records
            .iter()
            .flat_map(|r| r.assignment.keys().cloned())
            .collect();
        columns.sort();
        columns.dedup();
        Self { columns, records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, record: Record) {
        for k in record.assignment.keys() {
            if !self.columns.contains(k) {
                self.columns.push(k.clone());
            }
        }
        self.records.push(record);
    }

    pub fn extend(&mut self, other: &RecordSet) {
        for r in &other.records {
            self.push(r.clone());
        }
    }

    /// Dense per-record state indices aligned with `net.variables`.
    pub fn dense(&self, net: &Network) -> Result<Vec<Vec<Option<usize>>>, BnError> {
        let layout = Layout::build(net)?;
        self.dense_with(net, &layout)
    }

    pub(crate) fn dense_with(
        &self,
        net: &Network,
        layout: &Layout,
    ) -> Result<Vec<Vec<Option<usize>>>, BnError> {
        self.records
            .iter()
            .map(|r| {
                let mut row = vec![None; layout.len()];
                for (var, state) in &r.assignment {
                    let i = layout.index(var)?;
                    row[i] = Some(net.variables[i].state_index(state).ok_or_else(|| {
                        BnError::UnknownState {
                            variable: var.clone(),
                            state: state.clone(),
                        }
                    })?);
                }
                Ok(row)
            })
            .collect()
    }

    /// Writes the CSV layout. Provenance is appended as a trailing column
    /// only when `with_provenance` is set.
    pub fn write_csv<W: Write>(&self, writer: W, with_provenance: bool) -> Result<(), LearnError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.columns.iter().map(String::as_str).collect();
        if with_provenance {
            header.push(PROVENANCE_COLUMN);
        }
        w.write_record(&header)?;
        for r in &self.records {
            let mut row: Vec<&str> = self
                .columns
                .iter()
                .map(|c| r.assignment.get(c).map_or("", String::as_str))
                .collect();
            if with_provenance {
                row.push(r.provenance.as_str());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self, with_provenance: bool) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, with_provenance)
            .expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    /// Reads the CSV layout. Rows without a provenance column are tagged
    /// with `default_provenance`.
    pub fn read_csv<R: Read>(
        reader: R,
        default_provenance: Provenance,
    ) -> Result<Self, LearnError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let prov_col = header.iter().position(|h| h == PROVENANCE_COLUMN);
        let columns: Vec<String> = header
            .iter()
            .filter(|h| *h != PROVENANCE_COLUMN)
            .cloned()
            .collect();
        let mut set = RecordSet::new(columns);
        for (line, row) in rdr.records().enumerate() {
            let row = row?;
            let mut assignment = BTreeMap::new();
            let mut provenance = default_provenance;
            for (i, cell) in row.iter().enumerate() {
                if Some(i) == prov_col {
                    provenance = Provenance::parse(cell).ok_or_else(|| LearnError::Format {
                        line: line + 2,
                        message: format!("unknown provenance {cell:?}"),
                    })?;
                } else if !cell.is_empty() {
                    assignment.insert(header[i].clone(), cell.to_string());
                }
            }
            set.records.push(Record::new(assignment, provenance));
        }
        Ok(set)
    }

    /// SHA-256 over the canonical CSV form including provenance.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_csv_string(true).as_bytes());
        hex::encode(hasher.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RecordSet {
        let mut rs = RecordSet::new(vec!["A".into(), "B".into()]);
        rs.push(Record::new(
            [("A".to_string(), "true".to_string())].into(),
            Provenance::CrossCompany,
        ));
        rs.push(Record::new(
            [
                ("A".to_string(), "false".to_string()),
                ("B".to_string(), "true".to_string()),
            ]
            .into(),
            Provenance::WithinCompany,
        ));
        rs
    }

    #[test]
    fn csv_round_trip_keeps_missing_cells_and_provenance() {
        let rs = sample();
        let text = rs.to_csv_string(true);
        assert_eq!(
            text,
            "A,B,provenance\ntrue,,cross-company\nfalse,true,within-company\n"
        );
        assert_eq!(
            RecordSet::read_csv(text.as_bytes(), Provenance::Synthetic).unwrap(),
            rs
        );
    }

    #[test]
    fn plain_layout_uses_default_provenance() {
        let rs = RecordSet::read_csv("A\ntrue\n\n".as_bytes(), Provenance::Synthetic).unwrap();
        assert_eq!(rs.len(), 1);
        assert_eq!(rs.records[0].provenance, Provenance::Synthetic);
    }

    #[test]
    fn fingerprint_changes_with_content() {
        let a = sample();
        let mut b = sample();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.records[0].provenance = Provenance::Synthetic;
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
