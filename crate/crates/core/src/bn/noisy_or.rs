use super::network::{Cpt, NoisyOrCpd};
use super::BnError;

/// Largest parent count accepted when materializing a noisy-OR as a table.
pub const MAX_NOISY_OR_PARENTS: usize = 16;

/// Whether parent `j` (of `k`) is active in CPT row `row`.
pub(crate) fn parent_active(row: usize, j: usize, k: usize) -> bool {
    (row >> (k - 1 - j)) & 1 == 1
}

/// Materializes a noisy-OR distribution as an explicit table over
/// `[false, true]`, rows enumerated with the last parent varying fastest.
pub fn expand_noisy_or(cpd: &NoisyOrCpd) -> Result<Cpt, BnError> {
    let k = cpd.parents.len();
    if k > MAX_NOISY_OR_PARENTS {
        return Err(BnError::TooManyParents {
            variable: cpd.child.clone(),
            parents: k,
            max: MAX_NOISY_OR_PARENTS,
        });
    }
    if cpd.link_probs.len() != k {
        return Err(BnError::InvalidNetwork(format!(
            "{}: {} link probabilities for {k} parents",
            cpd.child,
            cpd.link_probs.len()
        )));
    }
    let rows = (0..1usize << k)
        .map(|row| {
            let p = cpd.p_true((0..k).map(|j| parent_active(row, j, k)));
            vec![1.0 - p, p]
        })
        .collect();
    Ok(Cpt {
        child: cpd.child.clone(),
        parents: cpd.parents.clone(),
        rows,
        fixed: cpd.fixed,
    })
}
