//! The shipped sample model and its synthetic citation set.
//!
//! The citation counts per problem follow the published survey ranking;
//! which causes and effects accompany each citation is synthetic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::citations::{read_citations, CitationRecord};
use super::schema::{parse_model, CauseEffectModel};
use crate::learn::Provenance;

pub const SAMPLE_MODEL_JSON: &str = include_str!("../../data/sample_model.json");
pub const SAMPLE_CITATIONS_CSV: &str = include_str!("../../data/sample_citations.csv");
pub const SAMPLE_SEED: u64 = 2016;

const CITATIONS_PER_PROBLEM: [usize; 5] = [32, 31, 31, 26, 21];

// Rows follow the problem order, columns the cause order C01..C12.
const CAUSE_PROPENSITY: [[f64; 12]; 5] = [
    [
        0.35, 0.10, 0.20, 0.08, 0.10, 0.10, 0.05, 0.10, 0.08, 0.05, 0.30, 0.03,
    ],
    [
        0.30, 0.15, 0.08, 0.18, 0.10, 0.08, 0.05, 0.45, 0.20, 0.12, 0.10, 0.05,
    ],
    [
        0.15, 0.25, 0.05, 0.20, 0.12, 0.15, 0.05, 0.25, 0.20, 0.15, 0.05, 0.08,
    ],
    [
        0.05, 0.03, 0.05, 0.15, 0.05, 0.15, 0.12, 0.15, 0.10, 0.12, 0.30, 0.15,
    ],
    [
        0.45, 0.20, 0.30, 0.03, 0.03, 0.08, 0.10, 0.05, 0.05, 0.03, 0.05, 0.02,
    ],
];

// Columns follow the effect order E1..E8.
const EFFECT_PROPENSITY: [[f64; 8]; 5] = [
    [0.45, 0.30, 0.15, 0.15, 0.30, 0.15, 0.05, 0.15],
    [0.20, 0.45, 0.25, 0.25, 0.35, 0.20, 0.10, 0.10],
    [0.15, 0.35, 0.30, 0.20, 0.25, 0.15, 0.30, 0.10],
    [0.10, 0.35, 0.20, 0.15, 0.40, 0.20, 0.10, 0.05],
    [0.40, 0.15, 0.10, 0.10, 0.40, 0.25, 0.05, 0.20],
];

pub fn sample_model() -> CauseEffectModel {
    parse_model(SAMPLE_MODEL_JSON).expect("shipped sample model is valid")
}

/// Shipped citation set (141 rows).
pub fn sample_citations() -> Vec<CitationRecord> {
    read_citations(
        &sample_model(),
        SAMPLE_CITATIONS_CSV.as_bytes(),
        Provenance::Synthetic,
    )
    .expect("shipped sample citations are valid")
}

/// Regenerates the sample citation set from `seed`.
pub fn synthetic_citations(seed: u64) -> Vec<CitationRecord> {
    let model = sample_model();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (p, problem) in model.problems.iter().enumerate() {
        for _ in 0..CITATIONS_PER_PROBLEM[p] {
            let cited_causes = model
                .causes
                .iter()
                .zip(CAUSE_PROPENSITY[p])
                .filter(|(_, q)| rng.random_bool(*q))
                .map(|(c, _)| c.id.clone())
                .collect();
            let cited_effects = model
                .effects
                .iter()
                .zip(EFFECT_PROPENSITY[p])
                .filter(|(_, q)| rng.random_bool(*q))
                .map(|(e, _)| e.id.clone())
                .collect();
            out.push(CitationRecord {
                problem_id: problem.id.clone(),
                cited_causes,
                cited_effects: Some(cited_effects),
                source: Provenance::Synthetic,
            });
        }
    }
    out
}
