#![allow(dead_code)]

pub mod universe;

use dca_core::bn::{Cpd, Cpt, EvidenceSet, Network, NoisyOrCpd, Variable};
use dca_core::learn::{Provenance, Record, RecordSet};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_row(rng: &mut ChaCha8Rng, card: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..card).map(|_| rng.random_range(0.02..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Random DAG over `n` variables in index order, up to `max_parents`
/// parents each. With `noisy_or_share > 0` some binary children with binary
/// parents use a noisy-OR instead of a table. `multi_state` allows
/// three-state variables.
pub fn random_network(
    rng: &mut ChaCha8Rng,
    n: usize,
    max_parents: usize,
    noisy_or_share: f64,
    multi_state: bool,
) -> Network {
    let mut variables = Vec::new();
    let mut cpds: Vec<Cpd> = Vec::new();
    for i in 0..n {
        let id = format!("v{i:02}");
        let var = if multi_state && rng.random_bool(0.3) {
            Variable::new(&id, &id, &["lo", "mid", "hi"])
        } else {
            Variable::binary(&id, &id)
        };
        let mut candidates: Vec<usize> = (0..i).collect();
        candidates.shuffle(rng);
        let k = rng.random_range(0..=max_parents.min(i));
        let mut parents: Vec<usize> = candidates.into_iter().take(k).collect();
        parents.sort();
        let parent_ids: Vec<String> = parents
            .iter()
            .map(|&p| variables_id(&variables, p))
            .collect();
        let all_binary =
            var.is_binary() && parents.iter().all(|&p| variables_is_binary(&variables, p));
        if all_binary && !parents.is_empty() && rng.random_bool(noisy_or_share) {
            let links = (0..parents.len())
                .map(|_| rng.random_range(0.05..0.95))
                .collect();
            let leak = if rng.random_bool(0.5) {
                0.0
            } else {
                rng.random_range(0.0..0.3)
            };
            cpds.push(
                NoisyOrCpd {
                    child: id.clone(),
                    parents: parent_ids,
                    link_probs: links,
                    leak,
                    fixed: false,
                }
                .into(),
            );
        } else {
            let rows: usize = parents.iter().map(|&p| card_of(&variables, p)).product();
            let card = var.cardinality();
            cpds.push(
                Cpt {
                    child: id.clone(),
                    parents: parent_ids,
                    rows: (0..rows).map(|_| random_row(rng, card)).collect(),
                    fixed: false,
                }
                .into(),
            );
        }
        variables.push(var);
    }
    // Shuffle the listing order so nothing relies on topological order.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    Network::new(
        "fuzz",
        order.iter().map(|&i| variables[i].clone()).collect(),
        order.iter().map(|&i| cpds[i].clone()).collect(),
    )
}

fn variables_id(vars: &[Variable], i: usize) -> String {
    vars[i].id.clone()
}

fn variables_is_binary(vars: &[Variable], i: usize) -> bool {
    vars[i].is_binary()
}

fn card_of(vars: &[Variable], i: usize) -> usize {
    vars[i].cardinality()
}

/// Ancestral sample: a full assignment drawn from the network.
pub fn forward_sample(rng: &mut ChaCha8Rng, net: &Network) -> Vec<(String, String)> {
    let mut assigned: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    while assigned.len() < net.variables.len() {
        for cpd in &net.cpds {
            let child = cpd.child().to_string();
            if assigned.contains_key(&child)
                || !cpd.parents().iter().all(|p| assigned.contains_key(p))
            {
                continue;
            }
            let var = net.variable(&child).unwrap();
            let dist: Vec<f64> = match cpd {
                Cpd::Table(t) => {
                    let row = t.parents.iter().fold(0usize, |acc, p| {
                        acc * net.variable(p).unwrap().cardinality() + assigned[p]
                    });
                    t.rows[row].clone()
                }
                Cpd::NoisyOr(n) => {
                    let p = n.p_true(n.parents.iter().map(|p| assigned[p] == 1));
                    vec![1.0 - p, p]
                }
            };
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut state = dist.len() - 1;
            for (s, p) in dist.iter().enumerate() {
                acc += p;
                if u < acc {
                    state = s;
                    break;
                }
            }
            let _ = var;
            assigned.insert(child, state);
        }
    }
    net.variables
        .iter()
        .map(|v| (v.id.clone(), v.states[assigned[&v.id]].clone()))
        .collect()
}

/// Evidence on a random subset of a forward sample (never impossible).
pub fn random_evidence(rng: &mut ChaCha8Rng, net: &Network, max_observed: usize) -> EvidenceSet {
    let sample = forward_sample(rng, net);
    let k = rng.random_range(0..=max_observed.min(sample.len()));
    let mut idx: Vec<usize> = (0..sample.len()).collect();
    idx.shuffle(rng);
    idx.into_iter().take(k).map(|i| sample[i].clone()).collect()
}

/// `count` forward samples with each value hidden with probability `missing`.
pub fn random_records(
    rng: &mut ChaCha8Rng,
    net: &Network,
    count: usize,
    missing: f64,
) -> RecordSet {
    let mut rs = RecordSet::new(net.variables.iter().map(|v| v.id.clone()).collect());
    for _ in 0..count {
        let assignment = forward_sample(rng, net)
            .into_iter()
            .filter(|_| !rng.random_bool(missing))
            .collect();
        rs.push(Record::new(assignment, Provenance::Synthetic));
    }
    rs
}

pub fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
    }
}
