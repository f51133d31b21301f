use super::elimination::{check_normalizer, Engine};
use super::network::Network;
use super::BnError;
use crate::learn::RecordSet;

/// Probability of one record's observed values, marginalizing the rest.
fn record_probability(engine: &Engine<'_>, dense: &[Option<usize>]) -> Result<f64, BnError> {
    if dense.iter().all(Option::is_none) {
        return Ok(1.0);
    }
    Ok(engine.query(dense, &[], None)?.factor.total())
}

/// Sum over records of `ln P(observed values)`. Returns
/// `f64::NEG_INFINITY` when some record is impossible under the model.
pub fn log_likelihood(net: &Network, records: &RecordSet) -> Result<f64, BnError> {
    let engine = Engine::new(net)?;
    let rows = records.dense(net)?;
    let mut total = 0.0;
    for row in &rows {
        let p = record_probability(&engine, row)?;
        if check_normalizer(p).is_err() {
            return Ok(f64::NEG_INFINITY);
        }
        total += p.ln();
    }
    Ok(total)
}
