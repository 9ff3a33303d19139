#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Output;
use std::time::{Duration, Instant};

use apgrid_plan::api::{router, AppState};
use axum::body::Body;
use axum::http::{HeaderMap, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt as _;
use serde_json::Value;
use tempfile::TempDir;
use tower::ServiceExt as _;

pub struct Reply {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.body)))
    }

    pub fn text(&self) -> String {
        String::from_utf8(self.body.clone()).unwrap()
    }
}

/// In-process service over a temporary data directory.
pub struct Api {
    pub router: Router,
    pub dir: TempDir,
}

impl Api {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        Self { router: router(AppState::open(dir.path(), 4).unwrap()), dir }
    }

    /// Service reopened on the same data directory.
    pub fn reopen(&self) -> Router {
        router(AppState::open(self.dir.path(), 4).unwrap())
    }

    pub async fn send(&self, method: Method, uri: &str, body: Option<&[u8]>, headers: &[(&str, &str)]) -> Reply {
        send(&self.router, method, uri, body, headers).await
    }

    pub async fn get(&self, uri: &str) -> Reply {
        self.send(Method::GET, uri, None, &[]).await
    }

    /// Creates a scenario and returns its id.
    pub async fn create(&self, text: &[u8]) -> String {
        let r = self.send(Method::POST, "/scenarios", Some(text), &[]).await;
        assert_eq!(r.status, StatusCode::CREATED, "{}", r.text());
        r.json()["id"].as_str().unwrap().to_owned()
    }

    /// Starts a run and returns its record.
    pub async fn start(&self, scenario: &str, request: &Value) -> Value {
        let body = serde_json::to_vec(request).unwrap();
        let r = self.send(Method::POST, &format!("/scenarios/{scenario}/runs"), Some(&body), &[]).await;
        assert_eq!(r.status, StatusCode::ACCEPTED, "{}", r.text());
        r.json()
    }

    /// Polls the result of a run until it is no longer pending.
    pub async fn result(&self, run: &str, query: &str) -> Reply {
        let deadline = Instant::now() + Duration::from_secs(120);
        loop {
            let r = self.get(&format!("/runs/{run}/result{query}")).await;
            if r.status != StatusCode::ACCEPTED {
                return r;
            }
            assert!(Instant::now() < deadline, "run {run} did not finish");
            tokio::time::sleep(Duration::from_millis(5)).await;
        }
    }

    /// Starts a run and waits for its result.
    pub async fn run(&self, scenario: &str, request: &Value) -> Reply {
        let record = self.start(scenario, request).await;
        self.result(record["id"].as_str().unwrap(), "").await
    }
}

pub async fn send(router: &Router, method: Method, uri: &str, body: Option<&[u8]>, headers: &[(&str, &str)]) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    if body.is_some() {
        req = req.header("content-type", "application/json");
    }
    for (k, v) in headers {
        req = req.header(*k, *v);
    }
    let req = req.body(body.map_or_else(Body::empty, |b| Body::from(b.to_vec()))).unwrap();
    let res = router.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let headers = res.headers().clone();
    let body = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, headers, body }
}

pub fn scenario_path(name: &str) -> PathBuf {
    apgrid_fixtures::golden_dir().join(format!("{name}.json"))
}

pub fn scenario_bytes(name: &str) -> Vec<u8> {
    std::fs::read(scenario_path(name)).unwrap()
}

/// Runs the `plan` binary in `cwd`.
pub fn plan(cwd: &Path, args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_plan")).current_dir(cwd).args(args).output().unwrap()
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

/// Compares `actual` with `tests/golden/<name>`; `UPDATE_GOLDEN=1` rewrites it.
pub fn check_golden(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "{name} differs; rerun with UPDATE_GOLDEN=1 after review");
}
