//! Scenario persistence: one canonical JSON file per scenario, replaced by
//! write-to-temp-then-rename so a reader never sees a partial file.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use apgrid::scenario::{parse_scenario, serialize_scenario, ScenarioFile};
use apgrid::ScenarioError;
use sha2::{Digest, Sha256};
use thiserror::Error;
use tokio::sync::Mutex;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown scenario `{0}`")]
    NotFound(String),
    #[error("scenario `{0}` is being written by another request")]
    Busy(String),
    #[error("scenario `{id}` changed: expected tag {expected}, current {current}")]
    Stale { id: String, expected: String, current: String },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("storage failure: {0}")]
    Io(#[from] std::io::Error),
}

/// Current content of one scenario.
#[derive(Clone, Debug)]
pub struct Stored {
    pub file: Arc<ScenarioFile<f64>>,
    /// Canonical serialization, exactly as on disk.
    pub text: Arc<str>,
    /// Content tag: hex SHA-256 of `text`.
    pub etag: String,
}

impl Stored {
    fn new(file: ScenarioFile<f64>) -> Self {
        let text = serialize_scenario(&file);
        Self { etag: sha256_hex(text.as_bytes()), text: text.into(), file: Arc::new(file) }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

struct Slot {
    current: RwLock<Stored>,
    /// Held for the duration of an update; a second writer is refused.
    writer: Mutex<()>,
}

pub struct ScenarioStore {
    dir: PathBuf,
    slots: RwLock<BTreeMap<String, Arc<Slot>>>,
}

fn is_valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

impl ScenarioStore {
    /// Opens `dir`, loading every valid `<id>.json` in it.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        let mut slots = BTreeMap::new();
        for entry in std::fs::read_dir(&dir)? {
            let path = entry?.path();
            let Some(id) = path.file_name().and_then(|n| n.to_str()).and_then(|n| n.strip_suffix(".json")) else {
                continue;
            };
            if !is_valid_id(id) {
                continue;
            }
            let bytes = std::fs::read(&path)?;
            match parse_scenario::<f64>(&bytes) {
                Ok(file) => {
                    slots.insert(
                        id.to_owned(),
                        Arc::new(Slot { current: RwLock::new(Stored::new(file)), writer: Mutex::new(()) }),
                    );
                }
                Err(e) => eprintln!("skipping {}: {e}", path.display()),
            }
        }
        Ok(Self { dir, slots: RwLock::new(slots) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, StoreError> {
        self.slots.read().expect("store lock").get(id).cloned().ok_or_else(|| StoreError::NotFound(id.to_owned()))
    }

    pub fn list(&self) -> Vec<(String, Stored)> {
        let slots = self.slots.read().expect("store lock");
        slots.iter().map(|(id, s)| (id.clone(), s.current.read().expect("slot lock").clone())).collect()
    }

    pub fn get(&self, id: &str) -> Result<Stored, StoreError> {
        Ok(self.slot(id)?.current.read().expect("slot lock").clone())
    }

    /// Validates and stores a new scenario under a fresh id.
    pub fn create(&self, bytes: &[u8]) -> Result<(String, Stored), StoreError> {
        let stored = Stored::new(parse_scenario(bytes)?);
        let id = uuid::Uuid::new_v4().simple().to_string();
        self.persist(&id, &stored.text)?;
        let slot = Arc::new(Slot { current: RwLock::new(stored.clone()), writer: Mutex::new(()) });
        self.slots.write().expect("store lock").insert(id.clone(), slot);
        Ok((id, stored))
    }

    /// Replaces a scenario. With `if_match`, the update applies only while
    /// the current tag still equals it.
    pub async fn update(&self, id: &str, bytes: &[u8], if_match: Option<&str>) -> Result<Stored, StoreError> {
        let slot = self.slot(id)?;
        let _guard = slot.writer.try_lock().map_err(|_| StoreError::Busy(id.to_owned()))?;
        let current = slot.current.read().expect("slot lock").etag.clone();
        if let Some(expected) = if_match {
            if expected != current {
                return Err(StoreError::Stale { id: id.to_owned(), expected: expected.to_owned(), current });
            }
        }
        let stored = Stored::new(parse_scenario(bytes)?);
        let (dir, id_owned, text) = (self.dir.clone(), id.to_owned(), stored.text.clone());
        tokio::task::spawn_blocking(move || write_atomic(&dir, &format!("{id_owned}.json"), text.as_bytes()))
            .await
            .map_err(|e| StoreError::Io(std::io::Error::other(e)))??;
        *slot.current.write().expect("slot lock") = stored.clone();
        Ok(stored)
    }

    fn persist(&self, id: &str, text: &str) -> Result<(), StoreError> {
        Ok(write_atomic(&self.dir, &format!("{id}.json"), text.as_bytes())?)
    }
}

/// Writes `dir/name` through a synced temporary file in the same directory.
pub(crate) fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = tempfile::Builder::new().prefix(".incoming-").tempfile_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name)).map_err(|e| e.error)?;
    Ok(())
}
