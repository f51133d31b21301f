use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::BnError;

/// State label used for the negative state of a binary variable.
pub const FALSE: &str = "false";
/// State label used for the positive state of a binary variable.
pub const TRUE: &str = "true";

/// A discrete random variable with an ordered list of state labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub id: String,
    pub name: String,
    pub states: Vec<String>,
}

impl Variable {
    pub fn new(id: impl Into<String>, name: impl Into<String>, states: &[&str]) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            states: states.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Binary variable with states `[false, true]`.
    pub fn binary(id: impl Into<String>, name: impl Into<String>) -> Self {
        Self::new(id, name, &[FALSE, TRUE])
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }

    pub fn is_binary(&self) -> bool {
        self.states.len() == 2 && self.states[0] == FALSE && self.states[1] == TRUE
    }
}

/// Conditional probability table. `rows` is row-major over the parent
/// order: the last parent varies fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cpt {
    pub child: String,
    #[serde(default)]
    pub parents: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Fixed distributions are never touched by learning or initialization.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fixed: bool,
}

impl Cpt {
    /// Parentless table holding a prior.
    pub fn prior(child: impl Into<String>, probs: Vec<f64>) -> Self {
        Self {
            child: child.into(),
            parents: Vec::new(),
            rows: vec![probs],
            fixed: false,
        }
    }

    pub fn new(child: impl Into<String>, parents: &[&str], rows: Vec<Vec<f64>>) -> Self {
        Self {
            child: child.into(),
            parents: parents.iter().map(|p| p.to_string()).collect(),
            rows,
            fixed: false,
        }
    }
}

/// Noisy-OR parameterization of a binary child with binary parents.
///
/// `P(child = true | active parents S) = 1 - (1 - leak) * prod_{i in S} (1 - link_probs[i])`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyOrCpd {
    pub child: String,
    pub parents: Vec<String>,
    pub link_probs: Vec<f64>,
    #[serde(default)]
    pub leak: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fixed: bool,
}

impl NoisyOrCpd {
    pub fn new(
        child: impl Into<String>,
        parents: &[&str],
        link_probs: Vec<f64>,
        leak: f64,
    ) -> Self {
        Self {
            child: child.into(),
            parents: parents.iter().map(|p| p.to_string()).collect(),
            link_probs,
            leak,
            fixed: false,
        }
    }

    /// Deterministic OR of the parents (all links 1, no leak), held fixed.
    pub fn deterministic_or(child: impl Into<String>, parents: Vec<String>) -> Self {
        let n = parents.len();
        Self {
            child: child.into(),
            parents,
            link_probs: vec![1.0; n],
            leak: 0.0,
            fixed: true,
        }
    }

    /// Probability of `child = true` given which parents are active.
    pub fn p_true<I: IntoIterator<Item = bool>>(&self, active: I) -> f64 {
        let off = active
            .into_iter()
            .zip(&self.link_probs)
            .filter(|(a, _)| *a)
            .fold(1.0 - self.leak, |acc, (_, p)| acc * (1.0 - p));
        1.0 - off
    }
}

/// A conditional distribution attached to one variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Cpd {
    Table(Cpt),
    NoisyOr(NoisyOrCpd),
}

impl Cpd {
    pub fn child(&self) -> &str {
        match self {
            Cpd::Table(t) => &t.child,
            Cpd::NoisyOr(n) => &n.child,
        }
    }

    pub fn parents(&self) -> &[String] {
        match self {
            Cpd::Table(t) => &t.parents,
            Cpd::NoisyOr(n) => &n.parents,
        }
    }

    pub fn is_fixed(&self) -> bool {
        match self {
            Cpd::Table(t) => t.fixed,
            Cpd::NoisyOr(n) => n.fixed,
        }
    }
}

impl From<Cpt> for Cpd {
    fn from(t: Cpt) -> Self {
        Cpd::Table(t)
    }
}

impl From<NoisyOrCpd> for Cpd {
    fn from(n: NoisyOrCpd) -> Self {
        Cpd::NoisyOr(n)
    }
}

/// Discrete Bayesian network. Construction does not validate; use
/// [`validate_network`](super::validate_network) or any inference entry
/// point, which refuses invalid networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub name: String,
    pub variables: Vec<Variable>,
    pub cpds: Vec<Cpd>,
}

impl Network {
    pub fn new(name: impl Into<String>, variables: Vec<Variable>, cpds: Vec<Cpd>) -> Self {
        Self {
            name: name.into(),
            variables,
            cpds,
        }
    }

    pub fn variable(&self, id: &str) -> Option<&Variable> {
        self.variables.iter().find(|v| v.id == id)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.id == id)
    }

    pub fn cpd(&self, child: &str) -> Option<&Cpd> {
        self.cpds.iter().find(|c| c.child() == child)
    }

    pub fn cpd_mut(&mut self, child: &str) -> Option<&mut Cpd> {
        self.cpds.iter_mut().find(|c| c.child() == child)
    }

    /// Subnetwork holding `ids` and all their ancestors, with CPDs unchanged.
    /// Marginals of the kept variables are identical to those in the full
    /// network because every dropped variable is a barren descendant.
    pub fn ancestral_subnetwork<S: AsRef<str>>(&self, ids: &[S]) -> Result<Network, BnError> {
        let layout = Layout::build(self)?;
        let seeds: Vec<usize> = ids
            .iter()
            .map(|id| layout.index(id.as_ref()))
            .collect::<Result<_, _>>()?;
        let keep = layout.ancestors(&seeds);
        let variables = self
            .variables
            .iter()
            .enumerate()
            .filter(|(i, _)| keep[*i])
            .map(|(_, v)| v.clone())
            .collect();
        let cpds = (0..self.variables.len())
            .filter(|i| keep[*i])
            .map(|i| self.cpds[layout.cpd_of[i]].clone())
            .collect();
        Ok(Network::new(self.name.clone(), variables, cpds))
    }
}

/// Observed states keyed by variable id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EvidenceSet {
    pub assignments: BTreeMap<String, String>,
}

impl EvidenceSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: impl Into<String>, state: impl Into<String>) -> Self {
        self.assignments.insert(var.into(), state.into());
        self
    }

    pub fn insert(&mut self, var: impl Into<String>, state: impl Into<String>) -> Option<String> {
        self.assignments.insert(var.into(), state.into())
    }

    pub fn get(&self, var: &str) -> Option<&str> {
        self.assignments.get(var).map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.assignments
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for EvidenceSet {
    fn from_iter<T: IntoIterator<Item = (K, V)>>(iter: T) -> Self {
        Self {
            assignments: iter
                .into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        }
    }
}

/// Index-based view of a validated network.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub ids: HashMap<String, usize>,
    pub cards: Vec<usize>,
    pub cpd_of: Vec<usize>,
    pub parents: Vec<Vec<usize>>,
    /// Rank of each variable when ids are sorted lexicographically.
    pub id_rank: Vec<usize>,
}

impl Layout {
    pub fn build(net: &Network) -> Result<Self, BnError> {
        let report = super::validate_network(net);
        if let Some(first) = report.findings.first() {
            return Err(BnError::InvalidNetwork(format!(
                "{} finding(s), first: {first}",
                report.findings.len()
            )));
        }
        let ids: HashMap<String, usize> = net
            .variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.id.clone(), i))
            .collect();
        let mut cpd_of = vec![usize::MAX; net.variables.len()];
        for (ci, cpd) in net.cpds.iter().enumerate() {
            cpd_of[ids[cpd.child()]] = ci;
        }
        let parents = cpd_of
            .iter()
            .map(|&ci| net.cpds[ci].parents().iter().map(|p| ids[p]).collect())
            .collect();
        let mut sorted: Vec<usize> = (0..net.variables.len()).collect();
        sorted.sort_by(|&a, &b| net.variables[a].id.cmp(&net.variables[b].id));
        let mut id_rank = vec![0; sorted.len()];
        for (rank, &v) in sorted.iter().enumerate() {
            id_rank[v] = rank;
        }
        Ok(Self {
            ids,
            cards: net.variables.iter().map(Variable::cardinality).collect(),
            cpd_of,
            parents,
            id_rank,
        })
    }

    pub fn len(&self) -> usize {
        self.cards.len()
    }

    pub fn index(&self, id: &str) -> Result<usize, BnError> {
        self.ids
            .get(id)
            .copied()
            .ok_or_else(|| BnError::UnknownVariable(id.to_string()))
    }

    /// Marks `seeds` and every ancestor of them.
    pub fn ancestors(&self, seeds: &[usize]) -> Vec<bool> {
        let mut mark = vec![false; self.len()];
        let mut stack: Vec<usize> = seeds.to_vec();
        while let Some(v) = stack.pop() {
            if !mark[v] {
                mark[v] = true;
                stack.extend(self.parents[v].iter().copied());
            }
        }
        mark
    }

    /// Dense evidence vector (`None` = unobserved) from an evidence set.
    pub fn dense_evidence(
        &self,
        net: &Network,
        evidence: &EvidenceSet,
    ) -> Result<Vec<Option<usize>>, BnError> {
        let mut dense = vec![None; self.len()];
        for (var, state) in evidence.iter() {
            let i = self.index(var)?;
            let s = net.variables[i]
                .state_index(state)
                .ok_or_else(|| BnError::UnknownState {
                    variable: var.to_string(),
                    state: state.to_string(),
                })?;
            dense[i] = Some(s);
        }
        Ok(dense)
    }
}
