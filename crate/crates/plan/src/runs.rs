//! Run registry: records of coverage, optimize and calibrate runs executed
//! on a bounded worker pool against a snapshot of their scenario.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use apgrid::scenario::ScenarioFile;
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

use crate::artifacts::{execute, RunKind, RunOutput, RunRequest};
use crate::store::{sha256_hex, write_atomic, Stored};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Queued,
    Running,
    Done,
    Failed,
}

impl RunStatus {
    /// Allowed moves: queued -> running -> done | failed.
    pub fn can_become(self, next: RunStatus) -> bool {
        matches!(
            (self, next),
            (RunStatus::Queued, RunStatus::Running) | (RunStatus::Running, RunStatus::Done | RunStatus::Failed)
        )
    }

    pub fn is_final(self) -> bool {
        matches!(self, RunStatus::Done | RunStatus::Failed)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub id: String,
    pub scenario_id: String,
    pub kind: RunKind,
    pub status: RunStatus,
    /// Hex SHA-256 over the scenario snapshot and the request.
    pub inputs_hash: String,
    pub seed: Option<u64>,
    pub request: RunRequest,
    pub created_ms: u64,
    pub started_ms: Option<u64>,
    pub finished_ms: Option<u64>,
    /// Compute time of the run itself.
    pub elapsed_ms: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Finished {
    record: RunRecord,
    result: Option<RunOutput>,
}

struct Entry {
    record: RunRecord,
    result: Option<Arc<RunOutput>>,
}

pub struct RunRegistry {
    entries: RwLock<HashMap<String, Entry>>,
    order: RwLock<Vec<String>>,
    permits: Arc<Semaphore>,
    dir: PathBuf,
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

pub fn inputs_hash(scenario: &Stored, request: &RunRequest) -> String {
    let req = serde_json::to_string(request).expect("request serializes");
    sha256_hex(format!("{}\n{}", scenario.text, req).as_bytes())
}

impl RunRegistry {
    /// Registry persisting finished runs under `dir` and running at most
    /// `workers` at once. Finished runs already in `dir` are loaded.
    pub fn open(dir: impl Into<PathBuf>, workers: usize) -> std::io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        let mut loaded: Vec<Finished> = Vec::new();
        for entry in std::fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                match serde_json::from_slice::<Finished>(&std::fs::read(&path)?) {
                    Ok(f) if f.record.status.is_final() => loaded.push(f),
                    Ok(_) => {}
                    Err(e) => eprintln!("skipping {}: {e}", path.display()),
                }
            }
        }
        loaded.sort_by(|a, b| (a.record.created_ms, &a.record.id).cmp(&(b.record.created_ms, &b.record.id)));
        let order = loaded.iter().map(|f| f.record.id.clone()).collect();
        let entries = loaded
            .into_iter()
            .map(|f| (f.record.id.clone(), Entry { record: f.record, result: f.result.map(Arc::new) }))
            .collect();
        Ok(Self {
            entries: RwLock::new(entries),
            order: RwLock::new(order),
            permits: Arc::new(Semaphore::new(workers.max(1))),
            dir,
        })
    }

    /// Queues a run on `snapshot` and returns its record immediately.
    pub fn submit(self: &Arc<Self>, scenario_id: &str, snapshot: Stored, request: RunRequest) -> RunRecord {
        let record = RunRecord {
            id: uuid::Uuid::new_v4().simple().to_string(),
            scenario_id: scenario_id.to_owned(),
            kind: request.kind(),
            status: RunStatus::Queued,
            inputs_hash: inputs_hash(&snapshot, &request),
            seed: request.seed(),
            request: request.clone(),
            created_ms: now_ms(),
            started_ms: None,
            finished_ms: None,
            elapsed_ms: None,
            error: None,
        };
        self.entries
            .write()
            .expect("registry lock")
            .insert(record.id.clone(), Entry { record: record.clone(), result: None });
        self.order.write().expect("registry lock").push(record.id.clone());

        let this = Arc::clone(self);
        let id = record.id.clone();
        let file = Arc::clone(&snapshot.file);
        tokio::spawn(async move {
            let Ok(_permit) = Arc::clone(&this.permits).acquire_owned().await else { return };
            this.advance(&id, RunStatus::Running, |r| r.started_ms = Some(now_ms()));
            let outcome = tokio::task::spawn_blocking(move || run(&file, &request)).await;
            let (result, error, elapsed) = match outcome {
                Ok((Ok(out), t)) => (Some(out), None, t),
                Ok((Err(e), t)) => (None, Some(e), t),
                Err(e) => (None, Some(format!("run aborted: {e}")), 0.0),
            };
            this.finish(&id, result, error, elapsed);
        });
        record
    }

    fn advance(&self, id: &str, next: RunStatus, edit: impl FnOnce(&mut RunRecord)) {
        let mut entries = self.entries.write().expect("registry lock");
        let entry = entries.get_mut(id).expect("run registered before it advances");
        assert!(entry.record.status.can_become(next), "{:?} -> {next:?}", entry.record.status);
        entry.record.status = next;
        edit(&mut entry.record);
    }

    /// Persists the final record before publishing it, so a run reported
    /// as finished is also on disk.
    fn finish(&self, id: &str, result: Option<RunOutput>, error: Option<String>, elapsed_ms: f64) {
        let status = if error.is_none() { RunStatus::Done } else { RunStatus::Failed };
        let mut record = self.get(id).expect("run registered before it finishes").0;
        assert!(record.status.can_become(status), "{:?} -> {status:?}", record.status);
        record.status = status;
        record.finished_ms = Some(now_ms());
        record.elapsed_ms = Some(elapsed_ms);
        record.error = error;
        let finished = Finished { record, result };
        if let Err(e) = self.persist(id, &finished) {
            eprintln!("could not persist run {id}: {e}");
        }
        let mut entries = self.entries.write().expect("registry lock");
        let entry = entries.get_mut(id).expect("registered");
        entry.record = finished.record;
        entry.result = finished.result.map(Arc::new);
    }

    fn persist(&self, id: &str, finished: &Finished) -> std::io::Result<()> {
        let bytes = serde_json::to_vec(finished).map_err(std::io::Error::other)?;
        write_atomic(&self.dir, &format!("{id}.json"), &bytes)
    }

    pub fn get(&self, id: &str) -> Option<(RunRecord, Option<Arc<RunOutput>>)> {
        let entries = self.entries.read().expect("registry lock");
        entries.get(id).map(|e| (e.record.clone(), e.result.clone()))
    }

    /// Runs of one scenario, oldest first.
    pub fn for_scenario(&self, scenario_id: &str) -> Vec<RunRecord> {
        let entries = self.entries.read().expect("registry lock");
        self.order
            .read()
            .expect("registry lock")
            .iter()
            .filter_map(|id| entries.get(id))
            .filter(|e| e.record.scenario_id == scenario_id)
            .map(|e| e.record.clone())
            .collect()
    }
}

fn run(file: &ScenarioFile<f64>, request: &RunRequest) -> (Result<RunOutput, String>, f64) {
    let start = Instant::now();
    let out = execute(file, request).map_err(|e| e.to_string());
    (out, start.elapsed().as_secs_f64() * 1e3)
}
