//! Sufficient statistics per family and the M-step that turns them into
//! distributions.

use crate::bn::{expand_noisy_or, Cpd, Cpt, Layout, Network, NoisyOrCpd, MAX_NOISY_OR_PARENTS};

use super::noisy_or_fit::project_noisy_or;
use super::LearnError;

/// Expected (or observed) counts for each learnable family, laid out as
/// `rows x child states`, row-major over the parent order.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct FamilyCounts {
    /// Indexed by variable; `None` for fixed distributions.
    pub tables: Vec<Option<Vec<f64>>>,
    pub child_cards: Vec<usize>,
}

impl FamilyCounts {
    pub fn zeros(net: &Network, layout: &Layout) -> Result<Self, LearnError> {
        let mut tables = Vec::with_capacity(layout.len());
        for v in 0..layout.len() {
            let cpd = &net.cpds[layout.cpd_of[v]];
            if cpd.is_fixed() {
                tables.push(None);
                continue;
            }
            if let Cpd::NoisyOr(n) = cpd {
                if n.parents.len() > MAX_NOISY_OR_PARENTS {
                    return Err(LearnError::Inference(crate::bn::BnError::TooManyParents {
                        variable: n.child.clone(),
                        parents: n.parents.len(),
                        max: MAX_NOISY_OR_PARENTS,
                    }));
                }
            }
            let rows: usize = layout.parents[v].iter().map(|&p| layout.cards[p]).product();
            tables.push(Some(vec![0.0; rows * layout.cards[v]]));
        }
        Ok(Self {
            tables,
            child_cards: layout.cards.clone(),
        })
    }

    pub fn add(&mut self, var: usize, offset: usize, weight: f64) {
        if let Some(t) = self.tables[var].as_mut() {
            t[offset] += weight;
        }
    }

    pub fn is_learnable(&self, var: usize) -> bool {
        self.tables[var].is_some()
    }
}

/// Offset of (parent states, child state) inside a family count table.
pub(crate) fn family_offset(
    layout: &Layout,
    var: usize,
    assignment: impl Fn(usize) -> usize,
) -> usize {
    let row = layout.parents[var]
        .iter()
        .fold(0usize, |acc, &p| acc * layout.cards[p] + assignment(p));
    row * layout.cards[var] + assignment(var)
}

/// Re-normalizes counts with Dirichlet smoothing `alpha`. Rows with no mass
/// at all become uniform. Noisy-OR families are fitted by projection,
/// starting from their current parameters in `current`.
pub(crate) fn maximize(
    current: &Network,
    layout: &Layout,
    counts: &FamilyCounts,
    alpha: f64,
) -> Network {
    let mut out = current.clone();
    for v in 0..layout.len() {
        let Some(table) = &counts.tables[v] else {
            continue;
        };
        let card = counts.child_cards[v];
        let ci = layout.cpd_of[v];
        let smoothed_rows = table.chunks(card).map(|row| {
            let total: f64 = row.iter().sum::<f64>() + alpha * card as f64;
            if total > 0.0 {
                row.iter()
                    .map(|c| (c + alpha) / total)
                    .collect::<Vec<f64>>()
            } else {
                vec![1.0 / card as f64; card]
            }
        });
        out.cpds[ci] = match &current.cpds[ci] {
            Cpd::Table(t) => Cpd::Table(Cpt {
                rows: smoothed_rows.collect(),
                ..t.clone()
            }),
            Cpd::NoisyOr(n) => {
                let smoothed: Vec<[f64; 2]> = table
                    .chunks(2)
                    .map(|r| [r[0] + alpha, r[1] + alpha])
                    .collect();
                Cpd::NoisyOr(project_noisy_or(n, &smoothed))
            }
        };
    }
    out
}

/// `alpha * sum ln(theta)` over every learnable probability, the Dirichlet
/// log-prior (up to a constant) whose mode the smoothed M-step computes.
pub(crate) fn log_prior(net: &Network, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    for cpd in net.cpds.iter().filter(|c| !c.is_fixed()) {
        let rows = match cpd {
            Cpd::Table(t) => t.rows.clone(),
            Cpd::NoisyOr(n) => expanded_rows(n),
        };
        total += rows.iter().flatten().map(|p| p.ln()).sum::<f64>();
    }
    alpha * total
}

fn expanded_rows(n: &NoisyOrCpd) -> Vec<Vec<f64>> {
    expand_noisy_or(n).map(|c| c.rows).unwrap_or_default()
}
