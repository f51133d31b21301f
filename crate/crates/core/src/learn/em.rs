use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bn::{BnError, CliqueTree, Engine, Factor, Network};

use super::init::initialize_parameters;
use super::stats::{family_offset, log_prior, maximize, FamilyCounts};
use super::{LearnError, RecordSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initialization {
    /// Start from a seeded Dirichlet draw (see [`initialize_parameters`]).
    #[default]
    Random,
    /// Start from the parameters already present in the structure.
    Structure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnConfig {
    pub max_iterations: usize,
    /// Stop once the objective changes by less than this between iterations.
    pub tolerance: f64,
    /// Dirichlet smoothing added to every count.
    pub pseudo_count: f64,
    pub seed: u64,
    #[serde(default)]
    pub init: Initialization,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-6,
            pseudo_count: 1.0,
            seed: 0,
            init: Initialization::Random,
        }
    }
}

impl LearnConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        if self.max_iterations == 0 {
            return Err(LearnError::InvalidConfig(
                "max_iterations must be positive".into(),
            ));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(LearnError::InvalidConfig(
                "tolerance must be a positive real".into(),
            ));
        }
        if !(self.pseudo_count >= 0.0 && self.pseudo_count.is_finite()) {
            return Err(LearnError::InvalidConfig(
                "pseudo_count must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnResult {
    pub network: Network,
    /// EM objective after initialization and after every M-step: the
    /// log-likelihood plus `pseudo_count * sum ln(theta)` over learnable
    /// parameters. Equals the plain log-likelihood when `pseudo_count` is 0.
    pub loglik_trace: Vec<f64>,
    /// Log-likelihood of the returned network on the training records.
    pub final_log_likelihood: f64,
    /// Number of M-steps performed.
    pub iterations: usize,
    pub converged: bool,
    pub pseudo_count: f64,
}

/// Identical records collapsed into (dense row, multiplicity), first-occurrence order.
fn collapse(rows: Vec<Vec<Option<usize>>>) -> Vec<(Vec<Option<usize>>, f64)> {
    let mut index: HashMap<Vec<Option<usize>>, usize> = HashMap::new();
    let mut out: Vec<(Vec<Option<usize>>, f64)> = Vec::new();
    for row in rows {
        match index.get(&row) {
            Some(&i) => out[i].1 += 1.0,
            None => {
                index.insert(row.clone(), out.len());
                out.push((row, 1.0));
            }
        }
    }
    out
}

struct RecordContribution {
    log_p: f64,
    entries: Vec<(usize, usize, f64)>,
}

fn record_statistics(
    engine: &Engine<'_>,
    tree: &CliqueTree,
    learnable: &[bool],
    row: &[Option<usize>],
    index: usize,
) -> Result<RecordContribution, LearnError> {
    let layout = &engine.layout;
    let calibrated = match tree.calibrate(row) {
        Ok(c) => c,
        Err(BnError::EvidenceInconsistent) => return Err(LearnError::ImpossibleRecord { index }),
        Err(e) => return Err(e.into()),
    };
    let mut entries = Vec::new();
    for v in (0..layout.len()).filter(|&v| learnable[v]) {
        let mut family = layout.parents[v].clone();
        family.push(v);
        let hidden: Vec<usize> = family
            .iter()
            .copied()
            .filter(|&x| row[x].is_none())
            .collect();
        if hidden.is_empty() {
            entries.push((v, family_offset(layout, v, |x| row[x].unwrap()), 1.0));
            continue;
        }
        let joint = match tree.family_marginal(&calibrated, v, &hidden) {
            Some(f) => f,
            None => {
                let out = engine.query(row, &hidden, None)?.factor;
                let z = out.total();
                let values = out.values().iter().map(|x| x / z).collect();
                Factor::new(out.scope().to_vec(), out.cards().to_vec(), values)
            }
        };
        let cards = joint.cards().to_vec();
        let mut config = vec![0usize; hidden.len()];
        for &value in joint.values() {
            if value > 0.0 {
                let state = |x: usize| match hidden.iter().position(|&h| h == x) {
                    Some(p) => config[p],
                    None => row[x].unwrap(),
                };
                entries.push((v, family_offset(layout, v, state), value));
            }
            for d in (0..config.len()).rev() {
                config[d] += 1;
                if config[d] < cards[d] {
                    break;
                }
                config[d] = 0;
            }
        }
    }
    Ok(RecordContribution {
        log_p: calibrated.probability.ln(),
        entries,
    })
}

/// Expected counts and log-likelihood under `net`. Records are processed in
/// parallel and reduced in record order, so results do not depend on
/// scheduling.
fn expectation(
    net: &Network,
    rows: &[(Vec<Option<usize>>, f64)],
) -> Result<(FamilyCounts, f64), LearnError> {
    let engine = Engine::new(net)?;
    let tree = CliqueTree::new(&engine);
    let mut counts = FamilyCounts::zeros(net, &engine.layout)?;
    let learnable: Vec<bool> = (0..engine.layout.len())
        .map(|v| counts.is_learnable(v))
        .collect();
    let contributions: Vec<Result<RecordContribution, LearnError>> = rows
        .par_iter()
        .enumerate()
        .map(|(i, (row, _))| record_statistics(&engine, &tree, &learnable, row, i))
        .collect();
    let mut loglik = 0.0;
    for ((_, weight), c) in rows.iter().zip(contributions) {
        let c = c?;
        loglik += weight * c.log_p;
        for (v, offset, p) in c.entries {
            counts.add(v, offset, weight * p);
        }
    }
    Ok((counts, loglik))
}

/// Expectation-maximization over records with missing values.
pub fn em_learn(
    structure: &Network,
    records: &RecordSet,
    config: &LearnConfig,
) -> Result<LearnResult, LearnError> {
    config.validate()?;
    let layout = crate::bn::Layout::build(structure)
        .map_err(|e| LearnError::InvalidStructure(e.to_string()))?;
    let rows = collapse(records.dense_with(structure, &layout)?);
    let alpha = config.pseudo_count;

    let mut network = match config.init {
        Initialization::Random => initialize_parameters(structure, config.seed),
        Initialization::Structure => structure.clone(),
    };
    let (mut counts, mut loglik) = expectation(&network, &rows)?;
    let mut trace = vec![loglik + log_prior(&network, alpha)];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iterations {
        network = maximize(&network, &layout, &counts, alpha);
        iterations += 1;
        (counts, loglik) = expectation(&network, &rows)?;
        let objective = loglik + log_prior(&network, alpha);
        let previous = *trace.last().unwrap();
        trace.push(objective);
        let delta = (objective - previous).abs();
        if delta < config.tolerance || (objective == previous) {
            converged = true;
            break;
        }
    }

    Ok(LearnResult {
        network,
        loglik_trace: trace,
        final_log_likelihood: loglik,
        iterations,
        converged,
        pseudo_count: alpha,
    })
}
