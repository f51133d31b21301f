use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use super::state::{CauseRef, Session};
use super::SessionError;
use crate::bn::Network;
use crate::learn::{em_learn, LearnConfig, LearnError, LearnResult, Provenance, RecordSet};
use crate::model::{
    compile, records_to_assignments, CauseEffectModel, CitationRecord, CompiledModel,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrainConfig {
    pub learn: LearnConfig,
    /// EM runs with seeds `learn.seed .. learn.seed + restarts`.
    pub restarts: usize,
}

impl Default for RetrainConfig {
    fn default() -> Self {
        Self {
            learn: LearnConfig::default(),
            restarts: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnMetadata {
    pub config: LearnConfig,
    pub restarts: usize,
    pub best_seed: u64,
    /// Final log-likelihood per seed, in seed order.
    pub seed_log_likelihoods: Vec<(u64, f64)>,
    pub final_log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub loglik_trace: Vec<f64>,
}

/// A trained model, immutable once created.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelVersion {
    pub id: String,
    pub parent: Option<String>,
    pub created_at: DateTime<Utc>,
    pub model: CauseEffectModel,
    pub network: Network,
    pub records_fingerprint: String,
    pub record_count: usize,
    pub learn: LearnMetadata,
}

impl ModelVersion {
    pub fn compiled(&self) -> Result<CompiledModel, SessionError> {
        Ok(compile(&self.model)?)
    }
}

/// The winning run, its seed and the final log-likelihood of every seed.
pub type RestartOutcome = (LearnResult, u64, Vec<(u64, f64)>);

/// Best of `restarts` EM runs by final log-likelihood; ties go to the lowest seed.
pub fn learn_with_restarts(
    structure: &Network,
    records: &RecordSet,
    config: &LearnConfig,
    restarts: usize,
) -> Result<RestartOutcome, LearnError> {
    if restarts == 0 {
        return Err(LearnError::InvalidConfig(
            "restarts must be positive".into(),
        ));
    }
    let seeds: Vec<u64> = (0..restarts as u64)
        .map(|i| config.seed.wrapping_add(i))
        .collect();
    let runs: Vec<(u64, LearnResult)> = seeds
        .par_iter()
        .map(|&seed| {
            let cfg = LearnConfig {
                seed,
                ..config.clone()
            };
            em_learn(structure, records, &cfg).map(|r| (seed, r))
        })
        .collect::<Result<_, _>>()?;
    let scores = runs
        .iter()
        .map(|(s, r)| (*s, r.final_log_likelihood))
        .collect();
    let mut best: Option<(u64, LearnResult)> = None;
    for (seed, run) in runs {
        if best
            .as_ref()
            .is_none_or(|(_, b)| run.final_log_likelihood > b.final_log_likelihood)
        {
            best = Some((seed, run));
        }
    }
    let (seed, result) = best.expect("at least one restart");
    Ok((result, seed, scores))
}

/// Trains a new version of `model` on `records`.
pub fn train_version(
    model: &CauseEffectModel,
    records: &RecordSet,
    config: &RetrainConfig,
    parent: Option<&str>,
) -> Result<ModelVersion, SessionError> {
    let compiled = compile(model)?;
    let (result, best_seed, seed_log_likelihoods) =
        learn_with_restarts(&compiled.network, records, &config.learn, config.restarts)?;
    Ok(ModelVersion {
        id: Uuid::new_v4().to_string(),
        parent: parent.map(str::to_string),
        created_at: Utc::now(),
        model: model.clone(),
        network: result.network,
        records_fingerprint: records.fingerprint(),
        record_count: records.len(),
        learn: LearnMetadata {
            config: config.learn.clone(),
            restarts: config.restarts,
            best_seed,
            seed_log_likelihoods,
            final_log_likelihood: result.final_log_likelihood,
            iterations: result.iterations,
            converged: result.converged,
            loglik_trace: result.loglik_trace,
        },
    })
}

/// Citations contributed by completed sessions: one per session and problem,
/// citing the model causes determined under that problem.
pub fn session_citations(
    parent: &ModelVersion,
    sessions: &[&Session],
) -> Result<Vec<CitationRecord>, SessionError> {
    let mut out = Vec::new();
    for s in sessions {
        if s.model_version_id != parent.id {
            return Err(SessionError::VersionMismatch {
                session: s.id.clone(),
                expected: parent.id.clone(),
                found: s.model_version_id.clone(),
            });
        }
        if !s.is_completed() {
            return Err(SessionError::SessionIncomplete(s.id.clone()));
        }
        let mut by_problem: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
        for c in &s.determined_causes {
            let cause_id = match &c.cause {
                CauseRef::Model { cause_id } => cause_id,
                CauseRef::FreeText { text } => {
                    return Err(SessionError::UnmappedFreeTextCause {
                        session: s.id.clone(),
                        text: text.clone(),
                    })
                }
            };
            let problem =
                c.problem_id
                    .as_deref()
                    .ok_or_else(|| SessionError::CauseWithoutProblem {
                        session: s.id.clone(),
                        cause: c.id.clone(),
                    })?;
            by_problem
                .entry(problem)
                .or_default()
                .insert(cause_id.clone());
        }
        for (problem, causes) in by_problem {
            out.push(CitationRecord {
                problem_id: problem.to_string(),
                cited_causes: causes,
                cited_effects: None,
                source: Provenance::WithinCompany,
            });
        }
    }
    Ok(out)
}

/// Appends the sessions' within-company citations to the parent's training
/// records and learns a child version. Returns the child and its records.
pub fn contribute_and_retrain(
    parent: &ModelVersion,
    parent_records: &RecordSet,
    sessions: &[&Session],
    config: &RetrainConfig,
) -> Result<(ModelVersion, RecordSet), SessionError> {
    let found = parent_records.fingerprint();
    if found != parent.records_fingerprint {
        return Err(SessionError::RecordsMismatch {
            expected: parent.records_fingerprint.clone(),
            found,
        });
    }
    let citations = session_citations(parent, sessions)?;
    if citations.is_empty() {
        return Err(SessionError::InvalidInput(
            "the sessions contribute no citations".into(),
        ));
    }
    let compiled = parent.compiled()?;
    let contributed = records_to_assignments(&parent.model, &compiled, &citations)?;
    let mut records = parent_records.clone();
    records.extend(&contributed);
    let child = train_version(&parent.model, &records, config, Some(&parent.id))?;
    Ok((child, records))
}
