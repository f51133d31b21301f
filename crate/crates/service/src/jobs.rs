use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use dca_core::learn::{Initialization, LearnConfig};
use dca_core::session::RetrainConfig;

use crate::error::ApiError;

/// Learning options accepted by the API and the command line. Unset fields
/// take the library defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingOptions {
    pub max_iterations: Option<usize>,
    pub tolerance: Option<f64>,
    /// Dirichlet pseudo-count.
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub restarts: Option<usize>,
    pub init: Option<Initialization>,
}

impl TrainingOptions {
    pub fn to_config(&self) -> Result<RetrainConfig, ApiError> {
        let d = RetrainConfig::default();
        let learn = LearnConfig {
            max_iterations: self.max_iterations.unwrap_or(d.learn.max_iterations),
            tolerance: self.tolerance.unwrap_or(d.learn.tolerance),
            pseudo_count: self.alpha.unwrap_or(d.learn.pseudo_count),
            seed: self.seed.unwrap_or(d.learn.seed),
            init: self.init.unwrap_or(d.learn.init),
        };
        learn.validate()?;
        let restarts = self.restarts.unwrap_or(d.restarts);
        if restarts == 0 {
            return Err(ApiError::new("invalid-config", "restarts must be positive"));
        }
        Ok(RetrainConfig { learn, restarts })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    Train,
    Retrain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Running,
    Succeeded,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: String,
    pub kind: JobKind,
    pub status: JobStatus,
    pub created_at: DateTime<Utc>,
    pub finished_at: Option<DateTime<Utc>>,
    pub version_id: Option<String>,
    pub error: Option<ApiError>,
}

/// In-memory registry of background training jobs.
#[derive(Clone, Default)]
pub struct Jobs {
    inner: Arc<Mutex<BTreeMap<String, Job>>>,
}

impl Jobs {
    pub fn get(&self, id: &str) -> Option<Job> {
        self.inner.lock().expect("jobs lock").get(id).cloned()
    }

    /// Runs `work` on the blocking pool and records its outcome.
    pub fn spawn<F>(&self, kind: JobKind, work: F) -> Job
    where
        F: FnOnce() -> Result<String, ApiError> + Send + 'static,
    {
        let job = Job {
            id: Uuid::new_v4().to_string(),
            kind,
            status: JobStatus::Running,
            created_at: Utc::now(),
            finished_at: None,
            version_id: None,
            error: None,
        };
        self.inner
            .lock()
            .expect("jobs lock")
            .insert(job.id.clone(), job.clone());
        let inner = self.inner.clone();
        let id = job.id.clone();
        tokio::task::spawn_blocking(move || {
            let outcome = work();
            let mut jobs = inner.lock().expect("jobs lock");
            let j = jobs.get_mut(&id).expect("job registered");
            j.finished_at = Some(Utc::now());
            match outcome {
                Ok(version) => {
                    j.status = JobStatus::Succeeded;
                    j.version_id = Some(version);
                }
                Err(e) => {
                    j.status = JobStatus::Failed;
                    j.error = Some(e);
                }
            }
        });
        job
    }
}
