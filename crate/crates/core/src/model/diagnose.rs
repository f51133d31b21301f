use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::compile::CompiledModel;
use super::schema::EntityKind;
use super::ModelError;
use crate::bn::{posterior, EvidenceSet, Network, TRUE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCause {
    pub id: String,
    pub label: String,
    pub probability: f64,
    /// Observed state when the cause is part of the evidence.
    pub observed: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCategory {
    pub id: String,
    pub label: String,
    pub probability: f64,
    pub causes: Vec<RankedCause>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisView {
    pub problem_id: String,
    pub problem_label: String,
    pub evidence: EvidenceSet,
    pub categories: Vec<RankedCategory>,
}

impl DiagnosisView {
    pub fn category(&self, id: &str) -> Option<&RankedCategory> {
        self.categories.iter().find(|c| c.id == id)
    }

    pub fn cause_probability(&self, id: &str) -> Option<f64> {
        self.categories
            .iter()
            .flat_map(|c| &c.causes)
            .find(|c| c.id == id)
            .map(|c| c.probability)
    }
}

/// Probabilities closer than this rank as ties.
const RANK_RESOLUTION: f64 = 1e12;

fn rank(pa: f64, la: &str, pb: f64, lb: &str) -> Ordering {
    let qa = (pa * RANK_RESOLUTION).round() as i64;
    let qb = (pb * RANK_RESOLUTION).round() as i64;
    qb.cmp(&qa).then_with(|| la.cmp(lb))
}

/// Posterior ranking of cause categories and causes given a problem.
///
/// `evidence` is keyed by model cause ids.
pub fn diagnose(
    compiled: &CompiledModel,
    trained: &Network,
    problem_id: &str,
    evidence: &EvidenceSet,
) -> Result<DiagnosisView, ModelError> {
    let model = &compiled.model;
    if model.kind_of(problem_id) != Some(EntityKind::Problem) {
        return Err(ModelError::UnknownId(problem_id.to_string()));
    }
    compiled.check_structure(trained)?;

    let mut full = EvidenceSet::new();
    for (id, state) in evidence.iter() {
        match model.kind_of(id) {
            Some(EntityKind::Cause) => {
                full.insert(compiled.node(id)?, state);
            }
            Some(_) => return Err(ModelError::EvidenceNotOnCause(id.to_string())),
            None => return Err(ModelError::UnknownId(id.to_string())),
        }
    }
    full.insert(compiled.node(problem_id)?, TRUE);

    let mut targets = Vec::new();
    for cat in &model.cause_categories {
        targets.push(compiled.node(&cat.id)?);
        for m in &cat.members {
            targets.push(compiled.node(m)?);
        }
    }
    let post = posterior(trained, &full, &targets)?;
    let p_true = |id: &str| -> Result<f64, ModelError> {
        let node = compiled.node(id)?;
        Ok(post[node][1].clamp(0.0, 1.0))
    };

    let mut categories = Vec::with_capacity(model.cause_categories.len());
    for cat in &model.cause_categories {
        let mut causes = Vec::with_capacity(cat.members.len());
        for m in &cat.members {
            causes.push(RankedCause {
                id: m.clone(),
                label: model.label(m).unwrap_or(m).to_string(),
                probability: p_true(m)?,
                observed: evidence.get(m).map(str::to_string),
            });
        }
        causes.sort_by(|a, b| rank(a.probability, &a.label, b.probability, &b.label));
        categories.push(RankedCategory {
            id: cat.id.clone(),
            label: cat.label.clone(),
            probability: p_true(&cat.id)?,
            causes,
        });
    }
    categories.sort_by(|a, b| rank(a.probability, &a.label, b.probability, &b.label));

    Ok(DiagnosisView {
        problem_id: problem_id.to_string(),
        problem_label: model.label(problem_id).unwrap_or(problem_id).to_string(),
        evidence: evidence.clone(),
        categories,
    })
}
