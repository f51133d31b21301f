use crate::bn::{Layout, Network};

use super::stats::{family_offset, maximize, FamilyCounts};
use super::{LearnError, RecordSet};

/// Maximum-likelihood (with `pseudo_count` smoothing) estimation from
/// complete records: each row becomes `(count + a) / (total + a * |states|)`.
/// Parent configurations never observed with `pseudo_count = 0` get a uniform row.
pub fn ml_counting(
    structure: &Network,
    records: &RecordSet,
    pseudo_count: f64,
) -> Result<Network, LearnError> {
    if !(pseudo_count >= 0.0 && pseudo_count.is_finite()) {
        return Err(LearnError::InvalidConfig(
            "pseudo_count must be nonnegative".into(),
        ));
    }
    let layout =
        Layout::build(structure).map_err(|e| LearnError::InvalidStructure(e.to_string()))?;
    let rows = records.dense_with(structure, &layout)?;
    let mut counts = FamilyCounts::zeros(structure, &layout)?;
    for (index, row) in rows.iter().enumerate() {
        if let Some(missing) = row.iter().position(Option::is_none) {
            return Err(LearnError::IncompleteRecord {
                index,
                variable: structure.variables[missing].id.clone(),
            });
        }
        for v in 0..layout.len() {
            counts.add(v, family_offset(&layout, v, |x| row[x].unwrap()), 1.0);
        }
    }
    Ok(maximize(structure, &layout, &counts, pseudo_count))
}
