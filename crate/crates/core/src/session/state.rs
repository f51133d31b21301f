use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use super::report::{generate_report, Report};
use super::version::ModelVersion;
use super::SessionError;
use crate::analytics::{
    group_defects, pareto, u_chart, AnalyticsError, DefectRecord, IterationStats, ParetoResult,
    SystematicError, UChartResult,
};
use crate::bn::EvidenceSet;
use crate::model::{diagnose, DiagnosisView, EntityKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    SelectSample,
    Classify,
    IdentifySystematicErrors,
    DetermineCauses,
    DevelopActions,
    Document,
}

impl Step {
    pub const ALL: [Step; 6] = [
        Step::SelectSample,
        Step::Classify,
        Step::IdentifySystematicErrors,
        Step::DetermineCauses,
        Step::DevelopActions,
        Step::Document,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Step::SelectSample => "select_sample",
            Step::Classify => "classify",
            Step::IdentifySystematicErrors => "identify_systematic_errors",
            Step::DetermineCauses => "determine_causes",
            Step::DevelopActions => "develop_actions",
            Step::Document => "document",
        }
    }

    pub fn parse(s: &str) -> Option<Step> {
        Step::ALL.into_iter().find(|x| x.as_str() == s)
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationChart {
    pub iteration_id: String,
    pub chart: UChartResult,
}

/// Snapshot taken when the sample is classified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub defect_count: usize,
    pub per_iteration: BTreeMap<String, usize>,
    pub pareto: ParetoResult,
    pub u_charts: Vec<IterationChart>,
}

/// One entry of the evidence ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticQuery {
    pub index: usize,
    pub model_version_id: String,
    pub problem_id: String,
    pub evidence: EvidenceSet,
    pub result: DiagnosisView,
    pub timestamp: DateTime<Utc>,
}

impl DiagnosticQuery {
    /// Recomputes the query and returns the largest posterior difference.
    pub fn replay(&self, version: &ModelVersion) -> Result<f64, SessionError> {
        if version.id != self.model_version_id {
            return Err(SessionError::VersionMismatch {
                session: format!("query {}", self.index),
                expected: self.model_version_id.clone(),
                found: version.id.clone(),
            });
        }
        let fresh = diagnose(
            &version.compiled()?,
            &version.network,
            &self.problem_id,
            &self.evidence,
        )?;
        let mut worst = 0.0f64;
        for cat in &self.result.categories {
            let other = fresh
                .category(&cat.id)
                .ok_or_else(|| SessionError::BadReference(cat.id.clone()))?;
            worst = worst.max((cat.probability - other.probability).abs());
            for c in &cat.causes {
                let p = fresh
                    .cause_probability(&c.id)
                    .ok_or_else(|| SessionError::BadReference(c.id.clone()))?;
                worst = worst.max((c.probability - p).abs());
            }
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CauseRef {
    Model { cause_id: String },
    FreeText { text: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterminedCause {
    pub id: String,
    pub systematic_error_id: String,
    pub cause: CauseRef,
    /// Model label or the free text.
    pub label: String,
    /// Cause category id from the model.
    pub category: String,
    /// Problem the cause was discussed under; required for retraining.
    #[serde(default)]
    pub problem_id: Option<String>,
    #[serde(default)]
    pub rationale: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionStatus {
    Proposed,
    InProgress,
    Done,
}

impl ActionStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ActionStatus::Proposed => "proposed",
            ActionStatus::InProgress => "in_progress",
            ActionStatus::Done => "done",
        }
    }

    pub fn can_become(self, next: ActionStatus) -> bool {
        matches!(
            (self, next),
            (ActionStatus::Proposed, ActionStatus::InProgress)
                | (ActionStatus::InProgress, ActionStatus::Done)
        )
    }
}

impl fmt::Display for ActionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionProposal {
    pub id: String,
    pub linked_causes: Vec<String>,
    pub description: String,
    #[serde(default)]
    pub owner: String,
    pub status: ActionStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub model_version_id: String,
    pub step: Step,
    /// Bumped by every successful mutation.
    pub revision: u64,
    pub sample: BTreeSet<String>,
    pub classification: Option<Classification>,
    pub systematic_errors: Vec<SystematicError>,
    pub queries: Vec<DiagnosticQuery>,
    pub determined_causes: Vec<DeterminedCause>,
    pub actions: Vec<ActionProposal>,
    pub report: Option<Report>,
}

pub fn create_session<'a>(
    versions: impl IntoIterator<Item = &'a ModelVersion>,
    model_version_id: &str,
) -> Result<Session, SessionError> {
    if !versions.into_iter().any(|v| v.id == model_version_id) {
        return Err(SessionError::UnknownVersion(model_version_id.to_string()));
    }
    Ok(Session {
        id: Uuid::new_v4().to_string(),
        created_at: Utc::now(),
        model_version_id: model_version_id.to_string(),
        step: Step::SelectSample,
        revision: 0,
        sample: BTreeSet::new(),
        classification: None,
        systematic_errors: Vec::new(),
        queries: Vec::new(),
        determined_causes: Vec::new(),
        actions: Vec::new(),
        report: None,
    })
}

impl Session {
    /// Rejects a write based on a stale revision.
    pub fn expect_revision(&self, expected: u64) -> Result<(), SessionError> {
        if expected == self.revision {
            Ok(())
        } else {
            Err(SessionError::Conflict {
                expected,
                actual: self.revision,
            })
        }
    }

    pub fn is_completed(&self) -> bool {
        self.step == Step::Document
    }

    fn require(&self, operation: &'static str, allowed: &[Step]) -> Result<(), SessionError> {
        if allowed.contains(&self.step) {
            Ok(())
        } else {
            Err(SessionError::WrongStep {
                operation,
                step: self.step,
            })
        }
    }

    fn touch(&mut self) {
        self.revision += 1;
    }

    fn entry_gate(&self, step: Step) -> Result<(), String> {
        match step {
            Step::SelectSample => Ok(()),
            Step::Classify if self.sample.is_empty() => Err("the sample is empty".into()),
            Step::IdentifySystematicErrors if self.classification.is_none() => {
                Err("the sample has not been classified".into())
            }
            Step::DetermineCauses if self.systematic_errors.is_empty() => {
                Err("no systematic error has been identified".into())
            }
            Step::DevelopActions if self.determined_causes.is_empty() => {
                Err("no cause has been determined".into())
            }
            _ => Ok(()),
        }
    }

    /// Moves to the next step or back to any earlier one.
    pub fn advance(&mut self, to: Step) -> Result<(), SessionError> {
        if to.index() > self.step.index() + 1 {
            return Err(SessionError::StepSkip {
                from: self.step,
                to,
            });
        }
        if to.index() == self.step.index() + 1 {
            self.entry_gate(to)
                .map_err(|reason| SessionError::GateUnsatisfied { step: to, reason })?;
        }
        self.step = to;
        self.touch();
        Ok(())
    }

    /// Every gate or integrity rule the current state breaks. Empty for
    /// any state reachable through the public operations.
    pub fn gate_violations(&self) -> Vec<String> {
        let mut out: Vec<String> = Step::ALL[..=self.step.index()]
            .iter()
            .filter_map(|&s| self.entry_gate(s).err().map(|r| format!("{s}: {r}")))
            .collect();
        if let Some(c) = &self.classification {
            if c.defect_count != self.sample.len() {
                out.push("classification does not match the sample".into());
            }
        }
        for e in &self.systematic_errors {
            if let Some(m) = e.members.iter().find(|m| !self.sample.contains(*m)) {
                out.push(format!(
                    "systematic error {} has member {m} outside the sample",
                    e.id
                ));
            }
        }
        for c in &self.determined_causes {
            match self
                .systematic_errors
                .iter()
                .find(|e| e.id == c.systematic_error_id)
            {
                Some(e) if e.member_count() > 0 => {}
                _ => out.push(format!(
                    "cause {} does not trace to a nonempty systematic error",
                    c.id
                )),
            }
        }
        for a in &self.actions {
            if a.linked_causes.is_empty() {
                out.push(format!("action {} has no linked cause", a.id));
            }
            for l in &a.linked_causes {
                if !self.determined_causes.iter().any(|c| &c.id == l) {
                    out.push(format!("action {} links unknown cause {l}", a.id));
                }
            }
        }
        out
    }

    /// Replaces the sample. Clears a classification that no longer matches.
    pub fn set_sample(
        &mut self,
        defect_ids: BTreeSet<String>,
        defects: &[DefectRecord],
    ) -> Result<(), SessionError> {
        self.require("set_sample", &[Step::SelectSample])?;
        let known: BTreeSet<&str> = defects.iter().map(|d| d.id.as_str()).collect();
        if let Some(missing) = defect_ids.iter().find(|d| !known.contains(d.as_str())) {
            return Err(SessionError::BadReference(format!(
                "unknown defect {missing}"
            )));
        }
        for e in &self.systematic_errors {
            if let Some(m) = e.members.iter().find(|m| !defect_ids.contains(*m)) {
                return Err(SessionError::BadReference(format!(
                    "defect {m} belongs to systematic error {}",
                    e.id
                )));
            }
        }
        if defect_ids != self.sample {
            self.classification = None;
            self.sample = defect_ids;
        }
        self.touch();
        Ok(())
    }

    pub fn sample_defects(
        &self,
        defects: &[DefectRecord],
    ) -> Result<Vec<DefectRecord>, SessionError> {
        let by_id: BTreeMap<&str, &DefectRecord> =
            defects.iter().map(|d| (d.id.as_str(), d)).collect();
        self.sample
            .iter()
            .map(|id| {
                by_id
                    .get(id.as_str())
                    .map(|d| (*d).clone())
                    .ok_or_else(|| SessionError::BadReference(format!("unknown defect {id}")))
            })
            .collect()
    }

    /// Takes the Pareto and per-iteration U-chart snapshot of the sample.
    pub fn classify(
        &mut self,
        defects: &[DefectRecord],
        stats: &[IterationStats],
    ) -> Result<&Classification, SessionError> {
        self.require("classify", &[Step::Classify])?;
        let sample = self.sample_defects(defects)?;
        let mut per_iteration: BTreeMap<String, usize> = BTreeMap::new();
        for d in &sample {
            *per_iteration.entry(d.iteration_id.clone()).or_default() += 1;
        }
        let mut u_charts = Vec::with_capacity(per_iteration.len());
        for iteration in per_iteration.keys() {
            let s = stats
                .iter()
                .find(|s| &s.iteration_id == iteration)
                .ok_or_else(|| AnalyticsError::UnknownIteration(iteration.clone()))?;
            u_charts.push(IterationChart {
                iteration_id: iteration.clone(),
                chart: u_chart(s, &sample)?,
            });
        }
        let classification = Classification {
            defect_count: sample.len(),
            per_iteration,
            pareto: pareto(&sample)?,
            u_charts,
        };
        self.touch();
        Ok(self.classification.insert(classification))
    }

    /// Adds a systematic error; returns grouping warnings.
    pub fn add_systematic_error(
        &mut self,
        candidate: SystematicError,
        defects: &[DefectRecord],
    ) -> Result<Vec<String>, SessionError> {
        self.require("add_systematic_error", &[Step::IdentifySystematicErrors])?;
        if candidate.id.trim().is_empty() {
            return Err(SessionError::InvalidInput(
                "systematic error id is empty".into(),
            ));
        }
        if self.systematic_errors.iter().any(|e| e.id == candidate.id) {
            return Err(SessionError::InvalidInput(format!(
                "duplicate systematic error {}",
                candidate.id
            )));
        }
        if let Some(m) = candidate.members.iter().find(|m| !self.sample.contains(*m)) {
            return Err(SessionError::BadReference(format!(
                "defect {m} is not in the sample"
            )));
        }
        let outcome = group_defects(defects, candidate)?;
        self.systematic_errors.push(outcome.error);
        self.touch();
        Ok(outcome.warnings)
    }

    pub fn remove_systematic_error(&mut self, id: &str) -> Result<(), SessionError> {
        self.require("remove_systematic_error", &[Step::IdentifySystematicErrors])?;
        if let Some(c) = self
            .determined_causes
            .iter()
            .find(|c| c.systematic_error_id == id)
        {
            return Err(SessionError::BadReference(format!(
                "systematic error {id} is referenced by cause {}",
                c.id
            )));
        }
        let before = self.systematic_errors.len();
        self.systematic_errors.retain(|e| e.id != id);
        if self.systematic_errors.len() == before {
            return Err(SessionError::BadReference(format!(
                "unknown systematic error {id}"
            )));
        }
        self.touch();
        Ok(())
    }

    /// Runs a diagnosis and appends it to the evidence ledger.
    pub fn run_diagnosis(
        &mut self,
        version: &ModelVersion,
        problem_id: &str,
        evidence: &EvidenceSet,
    ) -> Result<&DiagnosticQuery, SessionError> {
        self.require("run_diagnosis", &[Step::DetermineCauses])?;
        self.check_version(version)?;
        let result = diagnose(&version.compiled()?, &version.network, problem_id, evidence)?;
        let query = DiagnosticQuery {
            index: self.queries.len(),
            model_version_id: version.id.clone(),
            problem_id: problem_id.to_string(),
            evidence: evidence.clone(),
            result,
            timestamp: Utc::now(),
        };
        self.queries.push(query);
        self.touch();
        Ok(self.queries.last().expect("just pushed"))
    }

    /// Largest posterior drift over the whole ledger when replayed.
    pub fn verify_ledger(&self, version: &ModelVersion) -> Result<f64, SessionError> {
        self.queries
            .iter()
            .try_fold(0.0f64, |acc, q| Ok(acc.max(q.replay(version)?)))
    }

    fn check_version(&self, version: &ModelVersion) -> Result<(), SessionError> {
        if version.id == self.model_version_id {
            Ok(())
        } else {
            Err(SessionError::VersionMismatch {
                session: self.id.clone(),
                expected: self.model_version_id.clone(),
                found: version.id.clone(),
            })
        }
    }

    /// Records a cause for a systematic error and returns its id.
    pub fn record_cause(
        &mut self,
        version: &ModelVersion,
        systematic_error_id: &str,
        cause: CauseRef,
        category: &str,
        problem_id: Option<&str>,
        rationale: &str,
    ) -> Result<String, SessionError> {
        self.require("record_cause", &[Step::DetermineCauses])?;
        self.check_version(version)?;
        let model = &version.model;
        match self
            .systematic_errors
            .iter()
            .find(|e| e.id == systematic_error_id)
        {
            None => {
                return Err(SessionError::BadReference(format!(
                    "unknown systematic error {systematic_error_id}"
                )))
            }
            Some(e) if e.member_count() == 0 => {
                return Err(SessionError::BadReference(format!(
                    "systematic error {systematic_error_id} has no member defects"
                )))
            }
            Some(_) => {}
        }
        if model.kind_of(category) != Some(EntityKind::CauseCategory) {
            return Err(SessionError::BadReference(format!(
                "unknown cause category {category}"
            )));
        }
        let label = match &cause {
            CauseRef::Model { cause_id } => match model.category_of_cause(cause_id) {
                Some(c) if c.id == category => {
                    model.label(cause_id).unwrap_or(cause_id).to_string()
                }
                Some(c) => {
                    return Err(SessionError::BadReference(format!(
                        "cause {cause_id} belongs to category {}, not {category}",
                        c.id
                    )))
                }
                None => {
                    return Err(SessionError::BadReference(format!(
                        "unknown cause {cause_id}"
                    )))
                }
            },
            CauseRef::FreeText { text } if text.trim().is_empty() => {
                return Err(SessionError::InvalidInput(
                    "free-text cause is empty".into(),
                ))
            }
            CauseRef::FreeText { text } => text.trim().to_string(),
        };
        if let Some(p) = problem_id {
            if model.kind_of(p) != Some(EntityKind::Problem) {
                return Err(SessionError::BadReference(format!("unknown problem {p}")));
            }
        }
        let id = format!("DC{}", self.determined_causes.len() + 1);
        self.determined_causes.push(DeterminedCause {
            id: id.clone(),
            systematic_error_id: systematic_error_id.to_string(),
            cause,
            label,
            category: category.to_string(),
            problem_id: problem_id.map(str::to_string),
            rationale: rationale.to_string(),
        });
        self.touch();
        Ok(id)
    }

    pub fn propose_action(
        &mut self,
        linked_causes: &[String],
        description: &str,
        owner: &str,
    ) -> Result<String, SessionError> {
        self.require("propose_action", &[Step::DevelopActions])?;
        if linked_causes.is_empty() {
            return Err(SessionError::InvalidInput(
                "an action needs at least one linked cause".into(),
            ));
        }
        if let Some(l) = linked_causes
            .iter()
            .find(|l| !self.determined_causes.iter().any(|c| &c.id == *l))
        {
            return Err(SessionError::BadReference(format!("unknown cause {l}")));
        }
        let id = format!("A{}", self.actions.len() + 1);
        self.actions.push(ActionProposal {
            id: id.clone(),
            linked_causes: linked_causes.to_vec(),
            description: description.to_string(),
            owner: owner.to_string(),
            status: ActionStatus::Proposed,
        });
        self.touch();
        Ok(id)
    }

    pub fn set_action_status(
        &mut self,
        action_id: &str,
        status: ActionStatus,
    ) -> Result<(), SessionError> {
        self.require("set_action_status", &[Step::DevelopActions, Step::Document])?;
        let action = self
            .actions
            .iter_mut()
            .find(|a| a.id == action_id)
            .ok_or_else(|| SessionError::BadReference(format!("unknown action {action_id}")))?;
        if !action.status.can_become(status) {
            return Err(SessionError::IllegalStatusTransition {
                from: action.status,
                to: status,
            });
        }
        action.status = status;
        self.touch();
        Ok(())
    }

    /// Generates the report and stores it on the session.
    pub fn document(&mut self) -> Result<&Report, SessionError> {
        let report = generate_report(self)?;
        self.touch();
        Ok(self.report.insert(report))
    }
}
