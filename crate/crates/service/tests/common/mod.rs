#![allow(dead_code)]

use std::sync::OnceLock;

use dca_core::learn::{LearnConfig, RecordSet};
use dca_core::model::{compile, records_to_assignments, sample_citations, sample_model};
use dca_core::session::{train_version, ModelVersion, RetrainConfig};

pub fn quick_config() -> RetrainConfig {
    RetrainConfig {
        learn: LearnConfig {
            max_iterations: 30,
            ..LearnConfig::default()
        },
        restarts: 1,
    }
}

pub fn sample_records() -> RecordSet {
    let model = sample_model();
    let compiled = compile(&model).unwrap();
    records_to_assignments(&model, &compiled, &sample_citations()).unwrap()
}

pub fn quick_version() -> &'static ModelVersion {
    static V: OnceLock<ModelVersion> = OnceLock::new();
    V.get_or_init(|| {
        train_version(&sample_model(), &sample_records(), &quick_config(), None).unwrap()
    })
}
