//! Clique tree over an [`Engine`]'s factors, calibrated once per evidence
//! pattern so that every family marginal comes from a single two-pass
//! message schedule instead of one elimination per family.

use std::collections::{BTreeMap, BTreeSet};

use super::elimination::{eliminate_symbolic, greedy_min_degree, Engine};
use super::factor::Factor;
use super::network::Cpd;
use super::BnError;

pub(crate) struct CliqueTree {
    scopes: Vec<Vec<usize>>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    potentials: Vec<Factor>,
    /// Cluster holding each table family; `None` for noisy-OR families.
    home: Vec<Option<usize>>,
}

pub(crate) struct Calibrated {
    beliefs: Vec<Factor>,
    /// Probability of the evidence.
    pub probability: f64,
}

impl CliqueTree {
    pub fn new(engine: &Engine<'_>) -> Self {
        let factors: Vec<&Factor> = engine.families.iter().flatten().collect();
        let mut graph: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for f in &factors {
            for &a in f.scope() {
                graph
                    .entry(a)
                    .or_default()
                    .extend(f.scope().iter().copied().filter(|&b| b != a));
            }
        }
        let all: BTreeSet<usize> = graph.keys().copied().collect();
        let order = greedy_min_degree(graph.clone(), &all, &engine.rank);
        let mut step_of = vec![usize::MAX; engine.cards.len()];
        for (i, &v) in order.iter().enumerate() {
            step_of[v] = i;
        }

        let mut scopes = Vec::with_capacity(order.len());
        for &v in &order {
            let mut scope: Vec<usize> = graph
                .get(&v)
                .map(|n| n.iter().copied().collect())
                .unwrap_or_default();
            scope.push(v);
            scopes.push(scope);
            eliminate_symbolic(&mut graph, v);
        }
        let parent: Vec<Option<usize>> = scopes
            .iter()
            .zip(&order)
            .map(|(scope, &v)| scope.iter().filter(|&&x| x != v).map(|&x| step_of[x]).min())
            .collect();
        let mut children = vec![Vec::new(); scopes.len()];
        for (i, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(i);
            }
        }

        let mut potentials: Vec<Factor> = scopes
            .iter()
            .map(|s| {
                let cards: Vec<usize> = s.iter().map(|&x| engine.cards[x]).collect();
                let size = cards.iter().product();
                Factor::new(s.clone(), cards, vec![1.0; size])
            })
            .collect();
        let cluster_of = |f: &Factor| {
            f.scope()
                .iter()
                .map(|&x| step_of[x])
                .min()
                .expect("factor has a scope")
        };
        let n = engine.layout.len();
        let mut home = vec![None; n];
        for (v, family) in engine.families.iter().enumerate() {
            for f in family {
                let c = cluster_of(f);
                potentials[c] = potentials[c].product(f);
            }
            if matches!(engine.net.cpds[engine.layout.cpd_of[v]], Cpd::Table(_)) {
                home[v] = Some(cluster_of(&family[0]));
            }
        }
        Self {
            scopes,
            parent,
            children,
            potentials,
            home,
        }
    }

    /// Calibrates the tree on dense evidence over the network variables.
    pub fn calibrate(&self, evidence: &[Option<usize>]) -> Result<Calibrated, BnError> {
        let reduced: Vec<Factor> = self
            .potentials
            .iter()
            .map(|p| {
                let mut f = p.clone();
                for &var in p.scope() {
                    if let Some(s) = evidence.get(var).copied().flatten() {
                        f = f.reduce(var, s);
                    }
                }
                f
            })
            .collect();
        let m = reduced.len();
        let project = |f: Factor, target: &[usize]| {
            let drop: Vec<usize> = f
                .scope()
                .iter()
                .copied()
                .filter(|x| !target.contains(x))
                .collect();
            drop.into_iter().fold(f, |acc, x| acc.sum_out(x))
        };

        // Children always precede their parent in elimination order.
        let mut up: Vec<Option<Factor>> = vec![None; m];
        for i in 0..m {
            let mut f = reduced[i].clone();
            for &c in &self.children[i] {
                f = f.product(up[c].as_ref().expect("child message"));
            }
            if let Some(p) = self.parent[i] {
                up[i] = Some(project(f, &self.scopes[p]));
            } else {
                up[i] = Some(f);
            }
        }
        let mut probability = 1.0;
        for i in (0..m).filter(|&i| self.parent[i].is_none()) {
            probability *= up[i].as_ref().unwrap().total();
        }
        if !(probability > 0.0 && probability.is_finite()) {
            return Err(BnError::EvidenceInconsistent);
        }

        let mut down: Vec<Option<Factor>> = vec![None; m];
        let mut beliefs: Vec<Option<Factor>> = vec![None; m];
        for i in (0..m).rev() {
            let mut base = reduced[i].clone();
            if let Some(d) = &down[i] {
                base = base.product(d);
            }
            for &c in &self.children[i] {
                let mut f = base.clone();
                for &other in self.children[i].iter().filter(|&&o| o != c) {
                    f = f.product(up[other].as_ref().unwrap());
                }
                down[c] = Some(project(f, &self.scopes[c]));
            }
            let mut belief = base;
            for &c in &self.children[i] {
                belief = belief.product(up[c].as_ref().unwrap());
            }
            beliefs[i] = Some(belief);
        }
        Ok(Calibrated {
            beliefs: beliefs.into_iter().map(Option::unwrap).collect(),
            probability,
        })
    }

    /// Normalized joint over `hidden` (all in one table family `var`).
    pub fn family_marginal(
        &self,
        calibrated: &Calibrated,
        var: usize,
        hidden: &[usize],
    ) -> Option<Factor> {
        let belief = &calibrated.beliefs[self.home[var]?];
        let drop: Vec<usize> = belief
            .scope()
            .iter()
            .copied()
            .filter(|x| !hidden.contains(x))
            .collect();
        let f = drop
            .into_iter()
            .fold(belief.clone(), |acc, x| acc.sum_out(x))
            .permuted(hidden);
        let z = f.total();
        let values = f.values().iter().map(|v| v / z).collect();
        Some(Factor::new(f.scope().to_vec(), f.cards().to_vec(), values))
    }
}
