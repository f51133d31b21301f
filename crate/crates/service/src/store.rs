//! File-backed document store.
//!
//! Layout under the root directory:
//!
//! ```text
//! manifest.json            format tag and schema_version
//! models/<id>.json         uploaded cause-effect models
//! versions/<id>.json       trained model versions
//! record_sets/<sha>.csv    training records, keyed by fingerprint
//! sessions/<id>.json       DCA sessions
//! defects.json             defect collection with its revision
//! stats.json               per-iteration unit sizes and effort
//! ```
//!
//! Every write goes to a temporary sibling, is synced and then renamed over
//! the target, so a crash leaves either the old or the new document. Stray
//! temporaries are removed on open.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use uuid::Uuid;

use dca_core::analytics::{AnalyticsError, DefectRecord, IterationStats};
use dca_core::learn::{Provenance, RecordSet};
use dca_core::model::{CauseEffectModel, ModelError};
use dca_core::session::{create_session, ModelVersion, Session, SessionError};

pub const STORE_FORMAT: &str = "dca-store";
pub const SCHEMA_VERSION: u32 = 1;
const TMP_SUFFIX: &str = ".tmp";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store i/o failed at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt document {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("store schema version {found} is not supported (expected {expected})")]
    SchemaMismatch { expected: u32, found: u32 },
    #[error("store integrity violated: {0}")]
    Integrity(String),
    #[error("{kind} {id} does not exist")]
    NotFound { kind: &'static str, id: String },
    #[error("revision is {actual}, request was based on {expected}")]
    Conflict { expected: u64, actual: u64 },
    #[error("duplicate id {0}")]
    Duplicate(String),
    #[error("simulated crash before rename")]
    InjectedCrash,
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::Io { .. } => "io-error",
            StoreError::Corrupt { .. } => "store-corrupt",
            StoreError::SchemaMismatch { .. } => "schema-mismatch",
            StoreError::Integrity(_) => "store-integrity",
            StoreError::NotFound { .. } => "not-found",
            StoreError::Conflict { .. } => "conflict",
            StoreError::Duplicate(_) => "duplicate-id",
            StoreError::InjectedCrash => "injected-crash",
            StoreError::Session(e) => e.code(),
            StoreError::Analytics(e) => e.code(),
            StoreError::Model(e) => e.code(),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Where a simulated crash interrupts the next write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrashPoint {
    /// The temporary file is complete but never renamed.
    BeforeRename,
    /// Only half of the temporary file reached the disk.
    TornTemporary,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    schema_version: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredModel {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub model: CauseEffectModel,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DefectCollection {
    pub revision: u64,
    pub defects: Vec<DefectRecord>,
}

#[derive(Debug, Clone, Default)]
struct State {
    models: BTreeMap<String, StoredModel>,
    versions: BTreeMap<String, ModelVersion>,
    record_sets: BTreeMap<String, RecordSet>,
    sessions: BTreeMap<String, Session>,
    defects: DefectCollection,
    stats: Vec<IterationStats>,
}

pub struct Store {
    root: PathBuf,
    state: RwLock<State>,
    crash: Mutex<Option<CrashPoint>>,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, StoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| StoreError::Corrupt {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn read_dir_json<T: DeserializeOwned>(dir: &Path) -> Result<Vec<T>, StoreError> {
    let mut out = Vec::new();
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .map(|e| e.map(|e| e.path()).map_err(io_err(dir)))
        .collect::<Result<_, _>>()?;
    paths.sort();
    for p in paths
        .iter()
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
    {
        out.push(read_json(p)?);
    }
    Ok(out)
}

fn remove_temporaries(dir: &Path) -> Result<(), StoreError> {
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.to_string_lossy().ends_with(TMP_SUFFIX) {
            fs::remove_file(&path).map_err(io_err(&path))?;
        }
    }
    Ok(())
}

const COLLECTIONS: [&str; 4] = ["models", "versions", "record_sets", "sessions"];

impl Store {
    /// Opens the store at `root`, creating it when the directory is absent or empty.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        let store = Store {
            root: root.clone(),
            state: RwLock::new(State::default()),
            crash: Mutex::new(None),
        };
        let manifest_path = root.join("manifest.json");
        if manifest_path.exists() {
            let manifest: Manifest = read_json(&manifest_path)?;
            if manifest.format != STORE_FORMAT {
                return Err(StoreError::Corrupt {
                    path: manifest_path,
                    message: format!("expected format {STORE_FORMAT}, found {}", manifest.format),
                });
            }
            if manifest.schema_version != SCHEMA_VERSION {
                return Err(StoreError::SchemaMismatch {
                    expected: SCHEMA_VERSION,
                    found: manifest.schema_version,
                });
            }
        } else {
            let manifest = Manifest {
                format: STORE_FORMAT.to_string(),
                schema_version: SCHEMA_VERSION,
            };
            store.write_json(&manifest_path, &manifest)?;
        }
        remove_temporaries(&root)?;
        for c in COLLECTIONS {
            let dir = root.join(c);
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
            remove_temporaries(&dir)?;
        }
        let state = store.load()?;
        *store.state.write().expect("store lock") = state;
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn load(&self) -> Result<State, StoreError> {
        let mut state = State::default();
        for m in read_dir_json::<StoredModel>(&self.root.join("models"))? {
            state.models.insert(m.id.clone(), m);
        }
        for v in read_dir_json::<ModelVersion>(&self.root.join("versions"))? {
            state.versions.insert(v.id.clone(), v);
        }
        let dir = self.root.join("record_sets");
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let path = entry.map_err(io_err(&dir))?.path();
            let file = fs::File::open(&path).map_err(io_err(&path))?;
            let set = RecordSet::read_csv(file, Provenance::CrossCompany).map_err(|e| {
                StoreError::Corrupt {
                    path: path.clone(),
                    message: e.to_string(),
                }
            })?;
            let fp = set.fingerprint();
            if path.file_stem().and_then(|s| s.to_str()) != Some(fp.as_str()) {
                return Err(StoreError::Corrupt {
                    path,
                    message: "content does not match its fingerprint".into(),
                });
            }
            state.record_sets.insert(fp, set);
        }
        for s in read_dir_json::<Session>(&self.root.join("sessions"))? {
            state.sessions.insert(s.id.clone(), s);
        }
        let defects = self.root.join("defects.json");
        if defects.exists() {
            state.defects = read_json(&defects)?;
        }
        let stats = self.root.join("stats.json");
        if stats.exists() {
            state.stats = read_json(&stats)?;
        }
        check_integrity(&state)?;
        Ok(state)
    }

    /// Makes the next write stop at `point`, as if the process died there.
    pub fn inject_crash(&self, point: CrashPoint) {
        *self.crash.lock().expect("crash lock") = Some(point);
    }

    fn write_bytes(&self, path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("doc");
        let tmp = path.with_file_name(format!("{name}.{}{TMP_SUFFIX}", Uuid::new_v4().simple()));
        let crash = self.crash.lock().expect("crash lock").take();
        {
            let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
            let cut = match crash {
                Some(CrashPoint::TornTemporary) => bytes.len() / 2,
                _ => bytes.len(),
            };
            f.write_all(&bytes[..cut]).map_err(io_err(&tmp))?;
            f.sync_all().map_err(io_err(&tmp))?;
        }
        if crash.is_some() {
            return Err(StoreError::InjectedCrash);
        }
        fs::rename(&tmp, path).map_err(io_err(path))?;
        if let Some(dir) = path.parent() {
            if let Ok(d) = fs::File::open(dir) {
                let _ = d.sync_all();
            }
        }
        Ok(())
    }

    fn write_json<T: Serialize>(&self, path: &Path, value: &T) -> Result<(), StoreError> {
        let text = serde_json::to_string_pretty(value).expect("store documents serialize");
        self.write_bytes(path, text.as_bytes())
    }

    fn doc_path(&self, collection: &str, id: &str) -> Result<PathBuf, StoreError> {
        let safe = !id.is_empty()
            && id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        if !safe {
            return Err(StoreError::NotFound {
                kind: "document",
                id: id.to_string(),
            });
        }
        Ok(self.root.join(collection).join(format!("{id}.json")))
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, State> {
        self.state.read().expect("store lock")
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, State> {
        self.state.write().expect("store lock")
    }

    // Models.

    pub fn put_model(&self, model: CauseEffectModel) -> Result<StoredModel, StoreError> {
        model.validate()?;
        let stored = StoredModel {
            id: Uuid::new_v4().to_string(),
            created_at: Utc::now(),
            warnings: model.warnings(),
            model,
        };
        let mut state = self.write();
        self.write_json(&self.doc_path("models", &stored.id)?, &stored)?;
        state.models.insert(stored.id.clone(), stored.clone());
        Ok(stored)
    }

    pub fn models(&self) -> Vec<StoredModel> {
        self.read().models.values().cloned().collect()
    }

    pub fn model(&self, id: &str) -> Result<StoredModel, StoreError> {
        self.read()
            .models
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::NotFound {
                kind: "model",
                id: id.to_string(),
            })
    }

    // Versions and record sets.

    /// Stores a trained version together with its training records.
    pub fn put_version(
        &self,
        version: ModelVersion,
        records: &RecordSet,
    ) -> Result<ModelVersion, StoreError> {
        let fp = records.fingerprint();
        if fp != version.records_fingerprint {
            return Err(StoreError::Integrity(format!(
                "version {} was trained on {}, records hash to {fp}",
                version.id, version.records_fingerprint
            )));
        }
        let mut state = self.write();
        if state.versions.contains_key(&version.id) {
            return Err(StoreError::Duplicate(version.id));
        }
        if let Some(p) = &version.parent {
            if !state.versions.contains_key(p) {
                return Err(StoreError::NotFound {
                    kind: "version",
                    id: p.clone(),
                });
            }
        }
        if !state.record_sets.contains_key(&fp) {
            let path = self.root.join("record_sets").join(format!("{fp}.csv"));
            self.write_bytes(&path, records.to_csv_string(true).as_bytes())?;
            state.record_sets.insert(fp.clone(), records.clone());
        }
        self.write_json(&self.doc_path("versions", &version.id)?, &version)?;
        state.versions.insert(version.id.clone(), version.clone());
        Ok(version)
    }

    pub fn versions(&self) -> Vec<ModelVersion> {
        self.read().versions.values().cloned().collect()
    }

    pub fn version(&self, id: &str) -> Result<ModelVersion, StoreError> {
        self.read()
            .versions
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::NotFound {
                kind: "version",
                id: id.to_string(),
            })
    }

    pub fn record_set(&self, fingerprint: &str) -> Result<RecordSet, StoreError> {
        self.read()
            .record_sets
            .get(fingerprint)
            .cloned()
            .ok_or_else(|| StoreError::NotFound {
                kind: "record set",
                id: fingerprint.to_string(),
            })
    }

    // Sessions.

    pub fn create_session(&self, version_id: &str) -> Result<Session, StoreError> {
        let mut state = self.write();
        let session = create_session(state.versions.values(), version_id)?;
        self.write_json(&self.doc_path("sessions", &session.id)?, &session)?;
        state.sessions.insert(session.id.clone(), session.clone());
        Ok(session)
    }

    pub fn sessions(&self) -> Vec<Session> {
        self.read().sessions.values().cloned().collect()
    }

    pub fn session(&self, id: &str) -> Result<Session, StoreError> {
        self.read()
            .sessions
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::NotFound {
                kind: "session",
                id: id.to_string(),
            })
    }

    /// Applies `f` to a copy of the session if `expected_revision` is current,
    /// then persists it. A failing `f` leaves the stored session untouched.
    pub fn update_session<T>(
        &self,
        id: &str,
        expected_revision: u64,
        f: impl FnOnce(&mut Session) -> Result<T, SessionError>,
    ) -> Result<(Session, T), StoreError> {
        let mut state = self.write();
        let current = state.sessions.get(id).ok_or_else(|| StoreError::NotFound {
            kind: "session",
            id: id.to_string(),
        })?;
        current.expect_revision(expected_revision)?;
        let mut next = current.clone();
        let out = f(&mut next)?;
        self.write_json(&self.doc_path("sessions", id)?, &next)?;
        state.sessions.insert(id.to_string(), next.clone());
        Ok((next, out))
    }

    // Defects and iteration statistics.

    pub fn defects(&self) -> DefectCollection {
        self.read().defects.clone()
    }

    /// Appends defects; ids must be new. `expected_revision` is checked when given.
    pub fn add_defects(
        &self,
        defects: Vec<DefectRecord>,
        expected_revision: Option<u64>,
    ) -> Result<DefectCollection, StoreError> {
        let mut state = self.write();
        if let Some(e) = expected_revision {
            if e != state.defects.revision {
                return Err(StoreError::Conflict {
                    expected: e,
                    actual: state.defects.revision,
                });
            }
        }
        let mut next = state.defects.clone();
        for d in defects {
            if next.defects.iter().any(|x| x.id == d.id) {
                return Err(StoreError::Duplicate(d.id));
            }
            next.defects.push(d);
        }
        next.revision += 1;
        self.write_json(&self.root.join("defects.json"), &next)?;
        state.defects = next.clone();
        Ok(next)
    }

    pub fn tag_defect(
        &self,
        id: &str,
        expected_revision: u64,
        detail_tag: Option<String>,
        systematic_error_id: Option<String>,
    ) -> Result<DefectRecord, StoreError> {
        let mut state = self.write();
        if expected_revision != state.defects.revision {
            return Err(StoreError::Conflict {
                expected: expected_revision,
                actual: state.defects.revision,
            });
        }
        let mut next = state.defects.clone();
        let d = next
            .defects
            .iter_mut()
            .find(|d| d.id == id)
            .ok_or_else(|| StoreError::NotFound {
                kind: "defect",
                id: id.to_string(),
            })?;
        d.detail_tag = detail_tag.filter(|t| !t.is_empty());
        d.systematic_error_id = systematic_error_id.filter(|t| !t.is_empty());
        let tagged = d.clone();
        next.revision += 1;
        self.write_json(&self.root.join("defects.json"), &next)?;
        state.defects = next;
        Ok(tagged)
    }

    pub fn stats(&self) -> Vec<IterationStats> {
        self.read().stats.clone()
    }

    /// Inserts or replaces statistics per iteration.
    pub fn put_stats(&self, stats: Vec<IterationStats>) -> Result<Vec<IterationStats>, StoreError> {
        for s in &stats {
            s.validate()?;
        }
        let mut state = self.write();
        let mut next: BTreeMap<String, IterationStats> = state
            .stats
            .iter()
            .map(|s| (s.iteration_id.clone(), s.clone()))
            .collect();
        for s in stats {
            next.insert(s.iteration_id.clone(), s);
        }
        let next: Vec<IterationStats> = next.into_values().collect();
        self.write_json(&self.root.join("stats.json"), &next)?;
        state.stats = next.clone();
        Ok(next)
    }
}

fn check_integrity(state: &State) -> Result<(), StoreError> {
    for v in state.versions.values() {
        if let Some(p) = &v.parent {
            if !state.versions.contains_key(p) {
                return Err(StoreError::Integrity(format!(
                    "version {} has unknown parent {p}",
                    v.id
                )));
            }
        }
        if !state.record_sets.contains_key(&v.records_fingerprint) {
            return Err(StoreError::Integrity(format!(
                "version {} has no stored record set",
                v.id
            )));
        }
    }
    for s in state.sessions.values() {
        if !state.versions.contains_key(&s.model_version_id) {
            return Err(StoreError::Integrity(format!(
                "session {} refers to unknown version {}",
                s.id, s.model_version_id
            )));
        }
    }
    Ok(())
}
