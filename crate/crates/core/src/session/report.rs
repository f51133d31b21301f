use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::state::{ActionProposal, CauseRef, DiagnosticQuery, IterationChart, Session, Step};
use super::SessionError;
use crate::analytics::{DefectNature, ParetoResult};

pub const REPORT_FORMAT: &str = "dca-report";
pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSection {
    pub defect_count: usize,
    pub per_iteration: BTreeMap<String, usize>,
    pub defect_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationSection {
    pub pareto: ParetoResult,
    pub u_charts: Vec<IterationChart>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystematicErrorEntry {
    pub id: String,
    pub label: String,
    pub defect_category: DefectNature,
    pub iteration_id: String,
    pub member_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauseEntry {
    pub id: String,
    pub label: String,
    pub category: String,
    /// Model cause id; absent for free-text causes.
    pub model_cause_id: Option<String>,
    pub problem_id: Option<String>,
    pub rationale: String,
}

/// Causes determined for one systematic error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauseSection {
    pub systematic_error_id: String,
    pub systematic_error_label: String,
    pub causes: Vec<CauseEntry>,
}

/// Meeting report. The JSON form keeps the field order below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format: String,
    pub format_version: u32,
    pub session_id: String,
    pub model_version_id: String,
    pub sample: SampleSection,
    pub classification: ClassificationSection,
    pub systematic_errors: Vec<SystematicErrorEntry>,
    pub causes: Vec<CauseSection>,
    pub actions: Vec<ActionProposal>,
    pub evidence_ledger: Vec<DiagnosticQuery>,
}

impl Report {
    pub const SECTIONS: [&'static str; 6] = [
        "sample",
        "classification",
        "systematic_errors",
        "causes",
        "actions",
        "evidence_ledger",
    ];

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Printable rendering.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(w, "DCA meeting report");
        let _ = writeln!(w, "session: {}", self.session_id);
        let _ = writeln!(w, "model version: {}", self.model_version_id);

        let _ = writeln!(w, "\n1. Sample");
        let _ = writeln!(w, "   {} defects", self.sample.defect_count);
        for (it, n) in &self.sample.per_iteration {
            let _ = writeln!(w, "   {it}: {n}");
        }

        let _ = writeln!(w, "\n2. Classification");
        for e in &self.classification.pareto.entries {
            let _ = writeln!(
                w,
                "   {:<26} {:>4}  {:>6.2}%  cum {:>6.2}%",
                e.category,
                e.count,
                e.share * 100.0,
                e.cumulative_share * 100.0
            );
        }
        for c in &self.classification.u_charts {
            let flagged: Vec<&str> = c.chart.flagged().map(|p| p.unit_id.as_str()).collect();
            let _ = writeln!(
                w,
                "   u-chart {}: center line {:.4}, flagged: {}",
                c.iteration_id,
                c.chart.center_line,
                if flagged.is_empty() {
                    "none".to_string()
                } else {
                    flagged.join(", ")
                }
            );
        }

        let _ = writeln!(w, "\n3. Systematic errors");
        for e in &self.systematic_errors {
            let _ = writeln!(
                w,
                "   {} [{}] {} ({}): {} defects",
                e.id, e.iteration_id, e.label, e.defect_category, e.member_count
            );
        }

        let _ = writeln!(w, "\n4. Causes");
        for s in &self.causes {
            let _ = writeln!(
                w,
                "   {} {}",
                s.systematic_error_id, s.systematic_error_label
            );
            if s.causes.is_empty() {
                let _ = writeln!(w, "     (none)");
            }
            for c in &s.causes {
                let _ = writeln!(w, "     {} [{}] {}", c.id, c.category, c.label);
            }
        }

        let _ = writeln!(w, "\n5. Actions");
        for a in &self.actions {
            let _ = writeln!(
                w,
                "   {} [{}] {} (owner: {}; causes: {})",
                a.id,
                a.status,
                a.description,
                if a.owner.is_empty() { "-" } else { &a.owner },
                a.linked_causes.join(", ")
            );
        }

        let _ = writeln!(w, "\n6. Evidence ledger");
        for q in &self.evidence_ledger {
            let evidence: Vec<String> =
                q.evidence.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(
                w,
                "   #{} {} evidence: {}",
                q.index,
                q.problem_id,
                if evidence.is_empty() {
                    "none".to_string()
                } else {
                    evidence.join(", ")
                }
            );
            for cat in &q.result.categories {
                let _ = writeln!(w, "     {:<24} {:.4}", cat.id, cat.probability);
            }
        }
        out
    }
}

/// Builds the report from the session alone, so regeneration is byte-identical.
pub fn generate_report(session: &Session) -> Result<Report, SessionError> {
    if session.step != Step::Document {
        return Err(SessionError::WrongStep {
            operation: "generate_report",
            step: session.step,
        });
    }
    let classification =
        session
            .classification
            .as_ref()
            .ok_or_else(|| SessionError::GateUnsatisfied {
                step: Step::Document,
                reason: "the sample has not been classified".into(),
            })?;
    let causes = session
        .systematic_errors
        .iter()
        .map(|e| CauseSection {
            systematic_error_id: e.id.clone(),
            systematic_error_label: e.label.clone(),
            causes: session
                .determined_causes
                .iter()
                .filter(|c| c.systematic_error_id == e.id)
                .map(|c| CauseEntry {
                    id: c.id.clone(),
                    label: c.label.clone(),
                    category: c.category.clone(),
                    model_cause_id: match &c.cause {
                        CauseRef::Model { cause_id } => Some(cause_id.clone()),
                        CauseRef::FreeText { .. } => None,
                    },
                    problem_id: c.problem_id.clone(),
                    rationale: c.rationale.clone(),
                })
                .collect(),
        })
        .collect();
    Ok(Report {
        format: REPORT_FORMAT.to_string(),
        format_version: REPORT_FORMAT_VERSION,
        session_id: session.id.clone(),
        model_version_id: session.model_version_id.clone(),
        sample: SampleSection {
            defect_count: classification.defect_count,
            per_iteration: classification.per_iteration.clone(),
            defect_ids: session.sample.iter().cloned().collect(),
        },
        classification: ClassificationSection {
            pareto: classification.pareto.clone(),
            u_charts: classification.u_charts.clone(),
        },
        systematic_errors: session
            .systematic_errors
            .iter()
            .map(|e| SystematicErrorEntry {
                id: e.id.clone(),
                label: e.label.clone(),
                defect_category: e.defect_category,
                iteration_id: e.iteration_id.clone(),
                member_count: e.member_count(),
            })
            .collect(),
        causes,
        actions: session.actions.clone(),
        evidence_ledger: session.queries.clone(),
    })
}
