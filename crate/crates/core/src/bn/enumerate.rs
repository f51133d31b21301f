use super::network::{Cpd, EvidenceSet, Layout, Network};
use super::BnError;

/// Joint state-space size above which the enumeration oracle refuses to run.
pub const MAX_JOINT_CONFIGURATIONS: u128 = 1 << 20;

/// Probability of `child = state` under its distribution for a full assignment.
pub(crate) fn family_probability(
    cpd: &Cpd,
    layout: &Layout,
    child: usize,
    assignment: &[usize],
) -> f64 {
    let parents = &layout.parents[child];
    match cpd {
        Cpd::Table(t) => {
            let row = parents
                .iter()
                .fold(0usize, |acc, &p| acc * layout.cards[p] + assignment[p]);
            t.rows[row][assignment[child]]
        }
        Cpd::NoisyOr(n) => {
            let p = n.p_true(parents.iter().map(|&p| assignment[p] == 1));
            if assignment[child] == 1 {
                p
            } else {
                1.0 - p
            }
        }
    }
}

/// Exact posterior of `target` by summing the full joint over every
/// configuration consistent with `evidence`. Used as a verification oracle.
pub fn enumerate_posterior(
    net: &Network,
    evidence: &EvidenceSet,
    target: &str,
) -> Result<Vec<f64>, BnError> {
    let layout = Layout::build(net)?;
    let configurations: u128 = layout.cards.iter().map(|&c| c as u128).product();
    if configurations > MAX_JOINT_CONFIGURATIONS {
        return Err(BnError::StateSpaceTooLarge {
            configurations,
            limit: MAX_JOINT_CONFIGURATIONS,
        });
    }
    let dense = layout.dense_evidence(net, evidence)?;
    let t = layout.index(target)?;
    let n = layout.len();

    let mut sums = vec![0.0; layout.cards[t]];
    let mut assignment = vec![0usize; n];
    for _ in 0..configurations {
        let consistent = dense
            .iter()
            .zip(&assignment)
            .all(|(e, a)| e.is_none_or(|s| s == *a));
        if consistent {
            let p: f64 = (0..n)
                .map(|v| family_probability(&net.cpds[layout.cpd_of[v]], &layout, v, &assignment))
                .product();
            sums[assignment[t]] += p;
        }
        for d in (0..n).rev() {
            assignment[d] += 1;
            if assignment[d] < layout.cards[d] {
                break;
            }
            assignment[d] = 0;
        }
    }
    let z: f64 = sums.iter().sum();
    if !(z > 0.0 && z.is_finite()) {
        return Err(BnError::EvidenceInconsistent);
    }
    Ok(sums.into_iter().map(|s| s / z).collect())
}
