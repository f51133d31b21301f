use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::network::{Cpd, Network};

/// Row sums may deviate from 1 by at most this much.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FindingKind {
    Cycle,
    RowSum { row: usize, deviation: f64 },
    Shape { detail: String },
    DanglingReference { reference: String },
    DuplicateId,
    DuplicateState { state: String },
    TooFewStates,
    MissingCpd,
    DuplicateCpd,
    ProbabilityOutOfRange { value: f64 },
    NonBinary { detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub variable: String,
    #[serde(flatten)]
    pub kind: FindingKind,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FindingKind::Cycle => write!(f, "{}: participates in a cycle", self.variable),
            FindingKind::RowSum { row, deviation } => {
                write!(
                    f,
                    "{}: row {row} sum deviates from 1 by {deviation}",
                    self.variable
                )
            }
            FindingKind::Shape { detail } => {
                write!(f, "{}: shape mismatch ({detail})", self.variable)
            }
            FindingKind::DanglingReference { reference } => {
                write!(
                    f,
                    "{}: references unknown variable {reference}",
                    self.variable
                )
            }
            FindingKind::DuplicateId => write!(f, "{}: duplicate variable id", self.variable),
            FindingKind::DuplicateState { state } => {
                write!(f, "{}: duplicate state label {state}", self.variable)
            }
            FindingKind::TooFewStates => write!(f, "{}: fewer than two states", self.variable),
            FindingKind::MissingCpd => write!(f, "{}: no distribution", self.variable),
            FindingKind::DuplicateCpd => write!(f, "{}: more than one distribution", self.variable),
            FindingKind::ProbabilityOutOfRange { value } => {
                write!(f, "{}: probability {value} outside [0, 1]", self.variable)
            }
            FindingKind::NonBinary { detail } => write!(
                f,
                "{}: noisy-OR needs binary variables ({detail})",
                self.variable
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.findings.is_empty()
    }

    fn push(&mut self, variable: &str, kind: FindingKind) {
        self.findings.push(Finding {
            variable: variable.to_string(),
            kind,
        });
    }
}

fn in_unit_range(p: f64) -> bool {
    p.is_finite() && (0.0..=1.0).contains(&p)
}

/// Checks every structural and numeric invariant of `net`. Never fails;
/// problems are returned as findings.
pub fn validate_network(net: &Network) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, v) in net.variables.iter().enumerate() {
        if index.insert(v.id.as_str(), i).is_some() {
            report.push(&v.id, FindingKind::DuplicateId);
        }
        if v.states.len() < 2 {
            report.push(&v.id, FindingKind::TooFewStates);
        }
        let mut seen = HashSet::new();
        for s in &v.states {
            if !seen.insert(s.as_str()) {
                report.push(&v.id, FindingKind::DuplicateState { state: s.clone() });
            }
        }
    }

    let mut cpd_count = vec![0usize; net.variables.len()];
    let mut edges: Vec<Vec<usize>> = vec![Vec::new(); net.variables.len()];
    for cpd in &net.cpds {
        let child = cpd.child();
        let Some(&ci) = index.get(child) else {
            report.push(
                child,
                FindingKind::DanglingReference {
                    reference: child.to_string(),
                },
            );
            continue;
        };
        cpd_count[ci] += 1;
        let mut parents_ok = true;
        for p in cpd.parents() {
            match index.get(p.as_str()) {
                Some(&pi) => edges[pi].push(ci),
                None => {
                    parents_ok = false;
                    report.push(
                        child,
                        FindingKind::DanglingReference {
                            reference: p.clone(),
                        },
                    );
                }
            }
        }
        let mut seen = HashSet::new();
        for p in cpd.parents() {
            if !seen.insert(p.as_str()) {
                parents_ok = false;
                report.push(
                    child,
                    FindingKind::Shape {
                        detail: format!("parent {p} listed twice"),
                    },
                );
            }
        }
        if !parents_ok {
            continue;
        }
        match cpd {
            Cpd::Table(t) => {
                let child_card = net.variables[ci].cardinality();
                let expected_rows: usize = t
                    .parents
                    .iter()
                    .map(|p| net.variables[index[p.as_str()]].cardinality())
                    .product();
                if t.rows.len() != expected_rows {
                    report.push(
                        child,
                        FindingKind::Shape {
                            detail: format!(
                                "expected {expected_rows} rows, found {}",
                                t.rows.len()
                            ),
                        },
                    );
                    continue;
                }
                for (r, row) in t.rows.iter().enumerate() {
                    if row.len() != child_card {
                        report.push(
                            child,
                            FindingKind::Shape {
                                detail: format!(
                                    "row {r} has {} entries, expected {child_card}",
                                    row.len()
                                ),
                            },
                        );
                        continue;
                    }
                    if let Some(&bad) = row.iter().find(|p| !in_unit_range(**p)) {
                        report.push(child, FindingKind::ProbabilityOutOfRange { value: bad });
                        continue;
                    }
                    let deviation = (row.iter().sum::<f64>() - 1.0).abs();
                    if deviation > ROW_SUM_TOLERANCE {
                        report.push(child, FindingKind::RowSum { row: r, deviation });
                    }
                }
            }
            Cpd::NoisyOr(n) => {
                if !net.variables[ci].is_binary() {
                    report.push(
                        child,
                        FindingKind::NonBinary {
                            detail: "child".into(),
                        },
                    );
                }
                for p in &n.parents {
                    if !net.variables[index[p.as_str()]].is_binary() {
                        report.push(
                            child,
                            FindingKind::NonBinary {
                                detail: format!("parent {p}"),
                            },
                        );
                    }
                }
                if n.link_probs.len() != n.parents.len() {
                    report.push(
                        child,
                        FindingKind::Shape {
                            detail: format!(
                                "{} link probabilities for {} parents",
                                n.link_probs.len(),
                                n.parents.len()
                            ),
                        },
                    );
                }
                for &p in n.link_probs.iter().chain(std::iter::once(&n.leak)) {
                    if !in_unit_range(p) {
                        report.push(child, FindingKind::ProbabilityOutOfRange { value: p });
                    }
                }
            }
        }
    }

    for (i, count) in cpd_count.iter().enumerate() {
        match count {
            0 => report.push(&net.variables[i].id, FindingKind::MissingCpd),
            1 => {}
            _ => report.push(&net.variables[i].id, FindingKind::DuplicateCpd),
        }
    }

    for v in cyclic_nodes(&edges) {
        report.push(&net.variables[v].id, FindingKind::Cycle);
    }
    report
}

/// Nodes left over after Kahn's algorithm: members of cycles or downstream of one.
/// Only nodes lying on a cycle are reported.
fn cyclic_nodes(edges: &[Vec<usize>]) -> Vec<usize> {
    let n = edges.len();
    let mut indeg = vec![0usize; n];
    for out in edges {
        for &c in out {
            indeg[c] += 1;
        }
    }
    let mut queue: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut removed = vec![false; n];
    while let Some(v) = queue.pop() {
        removed[v] = true;
        for &c in &edges[v] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                queue.push(c);
            }
        }
    }
    // Reverse pass: strip nodes that cannot reach a remaining node's cycle.
    let mut out_deg: Vec<usize> = (0..n)
        .map(|v| {
            if removed[v] {
                0
            } else {
                edges[v].iter().filter(|&&c| !removed[c]).count()
            }
        })
        .collect();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (v, out) in edges.iter().enumerate() {
        for &c in out {
            preds[c].push(v);
        }
    }
    let mut stack: Vec<usize> = (0..n).filter(|&v| !removed[v] && out_deg[v] == 0).collect();
    while let Some(v) = stack.pop() {
        if removed[v] {
            continue;
        }
        removed[v] = true;
        for &p in &preds[v] {
            if !removed[p] {
                out_deg[p] -= 1;
                if out_deg[p] == 0 {
                    stack.push(p);
                }
            }
        }
    }
    (0..n).filter(|&v| !removed[v]).collect()
}
