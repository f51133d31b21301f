//! Exact inference by variable elimination.
//!
//! Noisy-OR families are not expanded into tables. Each one is decomposed
//! into a chain of binary OR gates over auxiliary variables
//! `S_0 .. S_{k-1}` with `S_0 ~ Bernoulli(leak)` and
//! `S_j = S_{j-1} OR (X_j activated with prob link_j)`, the child being the
//! last gate. Every chain factor has at most three variables, so a node with
//! many parents never produces a `2^k` table.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::factor::Factor;
use super::network::{Cpd, EvidenceSet, Layout, Network};
use super::BnError;

/// One elimination step: the variable removed and the scope of the
/// product formed just before summing it out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EliminationStep {
    pub variable: String,
    pub product_scope: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EliminationTrace {
    pub steps: Vec<EliminationStep>,
}

impl EliminationTrace {
    /// Largest number of variables held by any intermediate product.
    pub fn max_product_scope(&self) -> usize {
        self.steps
            .iter()
            .map(|s| s.product_scope.len())
            .max()
            .unwrap_or(0)
    }

    pub fn order(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.variable.as_str()).collect()
    }
}

/// Pre-built factors for a validated network, reusable across queries.
pub(crate) struct Engine<'a> {
    pub net: &'a Network,
    pub layout: Layout,
    /// Factors contributed by each network variable's distribution.
    pub families: Vec<Vec<Factor>>,
    /// Cardinality of every variable, network variables first then auxiliaries.
    pub cards: Vec<usize>,
    /// Tie-break rank for the min-degree heuristic.
    pub rank: Vec<usize>,
    aux_names: Vec<String>,
}

/// Eliminated variable index with the scope of the factor it produced.
type RawTrace = Vec<(usize, Vec<usize>)>;

pub(crate) struct QueryOutput {
    /// Unnormalized factor over `keep`, in the requested order.
    pub factor: Factor,
    pub trace: RawTrace,
}

impl<'a> Engine<'a> {
    pub fn new(net: &'a Network) -> Result<Self, BnError> {
        let layout = Layout::build(net)?;
        let n = layout.len();
        let mut cards = layout.cards.clone();
        let mut aux_names = Vec::new();
        let mut families = Vec::with_capacity(n);
        for v in 0..n {
            let family = match &net.cpds[layout.cpd_of[v]] {
                Cpd::Table(t) => {
                    let mut scope = layout.parents[v].clone();
                    scope.push(v);
                    let fcards = scope.iter().map(|&x| layout.cards[x]).collect();
                    let values = t.rows.iter().flatten().copied().collect();
                    vec![Factor::new(scope, fcards, values)]
                }
                Cpd::NoisyOr(nor) => {
                    let parents = &layout.parents[v];
                    let k = parents.len();
                    let leak_factor = |var: usize| {
                        Factor::new(vec![var], vec![2], vec![1.0 - nor.leak, nor.leak])
                    };
                    if k == 0 {
                        vec![leak_factor(v)]
                    } else {
                        let mut out = Vec::with_capacity(k + 1);
                        let mut prev = cards.len();
                        cards.push(2);
                        aux_names.push(format!("{}~leak", net.variables[v].id));
                        out.push(leak_factor(prev));
                        for (j, (&x, &link)) in parents.iter().zip(&nor.link_probs).enumerate() {
                            let next = if j + 1 == k {
                                v
                            } else {
                                let a = cards.len();
                                cards.push(2);
                                aux_names.push(format!("{}~{}", net.variables[v].id, j));
                                a
                            };
                            // scope (prev, x, next), next fastest
                            let values = vec![
                                1.0,
                                0.0, // prev=f, x=f
                                1.0 - link,
                                link, // prev=f, x=t
                                0.0,
                                1.0, // prev=t, x=f
                                0.0,
                                1.0, // prev=t, x=t
                            ];
                            out.push(Factor::new(vec![prev, x, next], vec![2, 2, 2], values));
                            prev = next;
                        }
                        out
                    }
                }
            };
            families.push(family);
        }
        let rank = (0..cards.len())
            .map(|i| if i < n { layout.id_rank[i] } else { i })
            .collect();
        Ok(Self {
            net,
            layout,
            families,
            cards,
            rank,
            aux_names,
        })
    }

    pub fn name(&self, var: usize) -> &str {
        let n = self.layout.len();
        if var < n {
            &self.net.variables[var].id
        } else {
            &self.aux_names[var - n]
        }
    }

    /// Joint (unnormalized) factor over `keep` given dense evidence.
    /// Variables listed in `order` are eliminated first, in that order;
    /// any remaining ones follow in min-degree order.
    pub fn query(
        &self,
        evidence: &[Option<usize>],
        keep: &[usize],
        order: Option<&[usize]>,
    ) -> Result<QueryOutput, BnError> {
        debug_assert!(keep.iter().all(|&k| evidence[k].is_none()));
        let mut seeds: Vec<usize> = keep.to_vec();
        seeds.extend(
            evidence
                .iter()
                .enumerate()
                .filter(|(_, e)| e.is_some())
                .map(|(i, _)| i),
        );
        let relevant = self.layout.ancestors(&seeds);

        let mut factors: Vec<Factor> = Vec::new();
        for v in (0..self.layout.len()).filter(|&v| relevant[v]) {
            for f in &self.families[v] {
                let mut f = f.clone();
                for &var in f.scope().to_vec().iter() {
                    if let Some(s) = evidence.get(var).copied().flatten() {
                        f = f.reduce(var, s);
                    }
                }
                factors.push(f);
            }
        }

        let keep_set: BTreeSet<usize> = keep.iter().copied().collect();
        let mut graph: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for f in &factors {
            for &a in f.scope() {
                let entry = graph.entry(a).or_default();
                entry.extend(f.scope().iter().copied().filter(|&b| b != a));
            }
        }
        let eliminable: BTreeSet<usize> = graph
            .keys()
            .copied()
            .filter(|v| !keep_set.contains(v))
            .collect();

        let mut plan: Vec<usize> = Vec::new();
        if let Some(order) = order {
            let mut seen = BTreeSet::new();
            for &v in order {
                if eliminable.contains(&v) && seen.insert(v) {
                    plan.push(v);
                }
            }
        }
        let mut remaining_graph = graph.clone();
        for &v in &plan {
            eliminate_symbolic(&mut remaining_graph, v);
        }
        let rest: BTreeSet<usize> = eliminable
            .iter()
            .copied()
            .filter(|v| !plan.contains(v))
            .collect();
        plan.extend(greedy_min_degree(remaining_graph, &rest, &self.rank));

        let mut trace = Vec::with_capacity(plan.len());
        for &var in &plan {
            let (touching, others): (Vec<Factor>, Vec<Factor>) =
                factors.into_iter().partition(|f| f.contains(var));
            factors = others;
            let Some(product) = touching.into_iter().reduce(|a, b| a.product(&b)) else {
                continue;
            };
            trace.push((var, product.scope().to_vec()));
            factors.push(product.sum_out(var));
        }

        let mut result = factors
            .into_iter()
            .reduce(|a, b| a.product(&b))
            .unwrap_or_else(|| Factor::scalar(1.0));
        // Kept variables with no factor at all cannot occur: each kept
        // variable is relevant and so contributes its own family.
        for &k in keep {
            if !result.contains(k) {
                let card = self.cards[k];
                result = result.product(&Factor::new(vec![k], vec![card], vec![1.0; card]));
            }
        }
        let factor = result.permuted(keep);
        Ok(QueryOutput { factor, trace })
    }

    /// Normalized posterior of one variable.
    pub fn marginal(
        &self,
        evidence: &[Option<usize>],
        target: usize,
        order: Option<&[usize]>,
    ) -> Result<(Vec<f64>, RawTrace), BnError> {
        if let Some(state) = evidence[target] {
            let out = self.query(evidence, &[], order)?;
            check_normalizer(out.factor.total())?;
            let mut v = vec![0.0; self.layout.cards[target]];
            v[state] = 1.0;
            return Ok((v, out.trace));
        }
        let out = self.query(evidence, &[target], order)?;
        let z = out.factor.total();
        check_normalizer(z)?;
        let probs = out
            .factor
            .values()
            .iter()
            .map(|p| (p / z).clamp(0.0, 1.0))
            .collect();
        Ok((probs, out.trace))
    }

    pub fn trace_named(&self, raw: RawTrace) -> EliminationTrace {
        EliminationTrace {
            steps: raw
                .into_iter()
                .map(|(v, scope)| EliminationStep {
                    variable: self.name(v).to_string(),
                    product_scope: scope.iter().map(|&x| self.name(x).to_string()).collect(),
                })
                .collect(),
        }
    }
}

pub(crate) fn check_normalizer(z: f64) -> Result<(), BnError> {
    if z > 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(BnError::EvidenceInconsistent)
    }
}

pub(crate) fn eliminate_symbolic(graph: &mut BTreeMap<usize, BTreeSet<usize>>, v: usize) {
    let Some(neighbors) = graph.remove(&v) else {
        return;
    };
    for &a in &neighbors {
        if let Some(adj) = graph.get_mut(&a) {
            adj.remove(&v);
            adj.extend(neighbors.iter().copied().filter(|&b| b != a));
        }
    }
}

/// Greedy elimination order: repeatedly remove the eliminable vertex of
/// smallest current degree, ties going to the smallest rank, and connect
/// its neighbours.
pub(crate) fn greedy_min_degree(
    mut graph: BTreeMap<usize, BTreeSet<usize>>,
    eliminable: &BTreeSet<usize>,
    rank: &[usize],
) -> Vec<usize> {
    let mut left: BTreeSet<usize> = eliminable.clone();
    let mut order = Vec::with_capacity(left.len());
    while let Some(&next) = left
        .iter()
        .min_by_key(|&&v| (graph.get(&v).map_or(0, BTreeSet::len), rank[v]))
    {
        left.remove(&next);
        eliminate_symbolic(&mut graph, next);
        order.push(next);
    }
    order
}

/// Min-degree elimination order over the moral graph of `net` for all
/// variables not in `keep`. Observed variables should be placed in `keep`.
/// Ties are broken by the lexicographically smallest variable id.
pub fn min_degree_order(net: &Network, keep: &BTreeSet<String>) -> Result<Vec<String>, BnError> {
    Ok(min_degree_plan(net, keep)?.0)
}

/// [`min_degree_order`] together with the symbolic elimination trace: each
/// step lists the eliminated variable and its neighbours at that point, i.e.
/// the scope of the product a numeric elimination would form.
pub fn min_degree_plan(
    net: &Network,
    keep: &BTreeSet<String>,
) -> Result<(Vec<String>, EliminationTrace), BnError> {
    let layout = Layout::build(net)?;
    let mut graph: BTreeMap<usize, BTreeSet<usize>> =
        (0..layout.len()).map(|v| (v, BTreeSet::new())).collect();
    for v in 0..layout.len() {
        let mut family = layout.parents[v].clone();
        family.push(v);
        for &a in &family {
            graph
                .get_mut(&a)
                .unwrap()
                .extend(family.iter().copied().filter(|&b| b != a));
        }
    }
    let eliminable: BTreeSet<usize> = (0..layout.len())
        .filter(|&v| !keep.contains(&net.variables[v].id))
        .collect();
    let order = greedy_min_degree(graph.clone(), &eliminable, &layout.id_rank);
    let id = |v: usize| net.variables[v].id.clone();
    let mut steps = Vec::with_capacity(order.len());
    for &v in &order {
        let mut scope = vec![id(v)];
        scope.extend(graph[&v].iter().map(|&n| id(n)));
        steps.push(EliminationStep {
            variable: id(v),
            product_scope: scope,
        });
        eliminate_symbolic(&mut graph, v);
    }
    Ok((
        order.into_iter().map(id).collect(),
        EliminationTrace { steps },
    ))
}

/// Posterior marginals of `targets` given `evidence`.
pub fn posterior<S: AsRef<str>>(
    net: &Network,
    evidence: &EvidenceSet,
    targets: &[S],
) -> Result<BTreeMap<String, Vec<f64>>, BnError> {
    if targets.is_empty() {
        return Ok(BTreeMap::new());
    }
    let engine = Engine::new(net)?;
    let dense = engine.layout.dense_evidence(net, evidence)?;
    targets
        .iter()
        .map(|t| {
            let idx = engine.layout.index(t.as_ref())?;
            let (probs, _) = engine.marginal(&dense, idx, None)?;
            Ok((t.as_ref().to_string(), probs))
        })
        .collect()
}

/// Posterior of one target together with the elimination trace.
pub fn posterior_traced(
    net: &Network,
    evidence: &EvidenceSet,
    target: &str,
) -> Result<(Vec<f64>, EliminationTrace), BnError> {
    let engine = Engine::new(net)?;
    let dense = engine.layout.dense_evidence(net, evidence)?;
    let (probs, raw) = engine.marginal(&dense, engine.layout.index(target)?, None)?;
    Ok((probs, engine.trace_named(raw)))
}

/// Posterior of one target eliminating variables in the caller's order.
/// Entries that are observed, kept, or irrelevant to the query are skipped;
/// variables the order omits are eliminated afterwards by min-degree.
pub fn posterior_with_order<S: AsRef<str>>(
    net: &Network,
    evidence: &EvidenceSet,
    target: &str,
    order: &[S],
) -> Result<(Vec<f64>, EliminationTrace), BnError> {
    let engine = Engine::new(net)?;
    let dense = engine.layout.dense_evidence(net, evidence)?;
    let order: Vec<usize> = order
        .iter()
        .map(|id| engine.layout.index(id.as_ref()))
        .collect::<Result<_, _>>()?;
    let (probs, raw) = engine.marginal(&dense, engine.layout.index(target)?, Some(&order))?;
    Ok((probs, engine.trace_named(raw)))
}
