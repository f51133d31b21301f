//! Regenerates `data/sample_citations.csv` from the fixed seed.

use std::fs::File;

use dca_core::model::{sample_model, synthetic_citations, write_citations, SAMPLE_SEED};

fn main() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample_citations.csv");
    let records = synthetic_citations(SAMPLE_SEED);
    write_citations(
        &sample_model(),
        &records,
        File::create(path).expect("create csv"),
    )
    .expect("write csv");
    println!("wrote {} citations to {path}", records.len());
}
