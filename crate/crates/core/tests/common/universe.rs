//! A small session universe explored exhaustively by breadth-first search.

use std::collections::{BTreeSet, HashSet, VecDeque};

use dca_core::analytics::{DefectNature, DefectRecord, IterationStats, SystematicError, UnitSize};
use dca_core::bn::EvidenceSet;
use dca_core::learn::{LearnConfig, Provenance};
use dca_core::model::{
    compile, records_to_assignments, Category, CauseEffectModel, CitationRecord, Entity,
};
use dca_core::session::{
    create_session, train_version, ActionStatus, CauseRef, ModelVersion, RetrainConfig, Session,
    Step,
};

fn quick_config() -> RetrainConfig {
    RetrainConfig {
        learn: LearnConfig {
            max_iterations: 30,
            ..LearnConfig::default()
        },
        restarts: 1,
    }
}

pub fn tiny_model() -> CauseEffectModel {
    CauseEffectModel {
        version: "tiny".into(),
        problems: vec![Entity::new("P1", "Problem")],
        cause_categories: vec![Category::new("K1", "people", &["c1", "c2"])],
        causes: vec![
            Entity::new("c1", "first cause"),
            Entity::new("c2", "second cause"),
        ],
        effect_categories: vec![],
        effects: vec![],
    }
}

pub fn tiny_version() -> ModelVersion {
    let model = tiny_model();
    let compiled = compile(&model).unwrap();
    let citations = vec![
        CitationRecord::new("P1", &["c1"], &[], Provenance::Synthetic),
        CitationRecord::new("P1", &["c2"], &[], Provenance::Synthetic),
        CitationRecord::new("P1", &[], &[], Provenance::Synthetic),
    ];
    let records = records_to_assignments(&model, &compiled, &citations).unwrap();
    train_version(&model, &records, &quick_config(), None).unwrap()
}

pub fn tiny_defects() -> (Vec<DefectRecord>, Vec<IterationStats>) {
    let d = |id: &str, unit: &str| DefectRecord {
        id: id.into(),
        iteration_id: "I".into(),
        unit_id: unit.into(),
        nature: DefectNature::Omission,
        description: String::new(),
        detail_tag: None,
        systematic_error_id: None,
    };
    let stats = IterationStats {
        iteration_id: "I".into(),
        units: vec![
            UnitSize {
                unit_id: "u1".into(),
                size_fp: 2.0,
            },
            UnitSize {
                unit_id: "u2".into(),
                size_fp: 3.0,
            },
        ],
        inspection_effort_hours: 1.0,
    };
    (
        vec![d("d1", "u1"), d("d2", "u1"), d("d3", "u2")],
        vec![stats],
    )
}

#[derive(Debug, Clone)]
pub enum Op {
    Advance(Step),
    SetSample(&'static [&'static str]),
    Classify,
    AddError(&'static str, &'static [&'static str]),
    RemoveError(&'static str),
    Diagnose,
    ModelCause(&'static str),
    FreeCause(&'static str),
    Propose(&'static [&'static str]),
    Status(ActionStatus),
    Document,
}

pub fn alphabet() -> Vec<Op> {
    let mut ops: Vec<Op> = Step::ALL.iter().map(|s| Op::Advance(*s)).collect();
    ops.extend([
        Op::SetSample(&[]),
        Op::SetSample(&["d1", "d2"]),
        Op::SetSample(&["d1", "d2", "d3"]),
        Op::Classify,
        Op::AddError("S1", &["d1"]),
        Op::AddError("S2", &[]),
        Op::AddError("S3", &["d3"]),
        Op::RemoveError("S1"),
        Op::RemoveError("S3"),
        Op::Diagnose,
        Op::ModelCause("S1"),
        Op::ModelCause("S2"),
        Op::FreeCause("S3"),
        Op::Propose(&["DC1"]),
        Op::Propose(&[]),
        Op::Status(ActionStatus::InProgress),
        Op::Status(ActionStatus::Done),
        Op::Status(ActionStatus::Proposed),
        Op::Document,
    ]);
    ops
}

pub fn apply(
    s: &mut Session,
    op: &Op,
    v: &ModelVersion,
    defects: &[DefectRecord],
    stats: &[IterationStats],
) -> bool {
    let ids = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let r = match op {
        Op::Advance(to) => s.advance(*to).map(|_| ()),
        Op::SetSample(xs) => s.set_sample(ids(xs).into_iter().collect(), defects),
        Op::Classify => s.classify(defects, stats).map(|_| ()),
        Op::AddError(id, members) => s
            .add_systematic_error(
                SystematicError {
                    id: id.to_string(),
                    label: id.to_string(),
                    defect_category: DefectNature::Omission,
                    iteration_id: "I".into(),
                    members: ids(members),
                },
                defects,
            )
            .map(|_| ()),
        Op::RemoveError(id) => s.remove_systematic_error(id),
        Op::Diagnose => s.run_diagnosis(v, "P1", &EvidenceSet::new()).map(|_| ()),
        Op::ModelCause(se) => s
            .record_cause(
                v,
                se,
                CauseRef::Model {
                    cause_id: "c1".into(),
                },
                "K1",
                Some("P1"),
                "",
            )
            .map(|_| ()),
        Op::FreeCause(se) => s
            .record_cause(
                v,
                se,
                CauseRef::FreeText {
                    text: "novel".into(),
                },
                "K1",
                None,
                "",
            )
            .map(|_| ()),
        Op::Propose(links) => s.propose_action(&ids(links), "act", "").map(|_| ()),
        Op::Status(st) => s.set_action_status("A1", *st),
        Op::Document => s.document().map(|_| ()),
    };
    r.is_ok()
}

pub fn state_key(s: &Session) -> String {
    let errors: Vec<(&str, usize)> = s
        .systematic_errors
        .iter()
        .map(|e| (e.id.as_str(), e.members.len()))
        .collect();
    let causes: Vec<(&str, &str)> = s
        .determined_causes
        .iter()
        .map(|c| (c.systematic_error_id.as_str(), c.label.as_str()))
        .collect();
    let actions: Vec<(&Vec<String>, ActionStatus)> = s
        .actions
        .iter()
        .map(|a| (&a.linked_causes, a.status))
        .collect();
    format!(
        "{:?}|{:?}|{}|{:?}|{:?}|{:?}|{}|{}",
        s.step,
        s.sample,
        s.classification.is_some(),
        errors,
        causes,
        actions,
        s.queries.len(),
        s.report.is_some()
    )
}

#[derive(Debug, Default)]
pub struct Exploration {
    pub states: usize,
    pub transitions: usize,
    pub steps_reached: usize,
}

/// Applies every operation to every reachable state, bounded by at most two
/// causes, one action and one query. Fails on the first gate violation or on
/// a failed operation that mutated the session.
pub fn explore() -> Result<Exploration, String> {
    let v = tiny_version();
    let (defects, stats) = tiny_defects();
    let root = create_session([&v], &v.id).map_err(|e| e.to_string())?;
    let ops = alphabet();
    let mut seen = HashSet::new();
    seen.insert(state_key(&root));
    let mut queue = VecDeque::from([root]);
    let mut transitions = 0usize;
    let mut steps_reached = BTreeSet::new();
    while let Some(s) = queue.pop_front() {
        steps_reached.insert(s.step);
        for op in &ops {
            let mut next = s.clone();
            if !apply(&mut next, op, &v, &defects, &stats) {
                if next != s {
                    return Err(format!(
                        "failed {op:?} mutated the session at {}",
                        state_key(&s)
                    ));
                }
                continue;
            }
            transitions += 1;
            if next.revision <= s.revision {
                return Err(format!("{op:?} did not bump the revision"));
            }
            let violations = next.gate_violations();
            if !violations.is_empty() {
                return Err(format!(
                    "{op:?} from {} reached {violations:?}",
                    state_key(&s)
                ));
            }
            let bounded = next.determined_causes.len() <= 2
                && next.actions.len() <= 1
                && next.queries.len() <= 1;
            if bounded && seen.insert(state_key(&next)) {
                queue.push_back(next);
            }
        }
    }
    Ok(Exploration {
        states: seen.len(),
        transitions,
        steps_reached: steps_reached.len(),
    })
}
