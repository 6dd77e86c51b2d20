#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use chrono::{TimeZone, Utc};
use http_body_util::BodyExt;
use jodkit::records::write_records;
use jodkit::simulate::{simulate_experiment, GroundTruth, PairStrategy, SimulationConfig};
use jodkit::{ComparisonRecord, RecordFormat};
use jodkit_service::clock::ManualClock;
use jodkit_service::{router, Service, ServiceConfig};
use rand::Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

/// Runs the binary, pinning the rayon pool size when `threads` is given.
pub fn jodkit(args: &[&str], threads: Option<usize>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_jodkit"));
    cmd.args(args).env_remove("JODKIT_LOG");
    if let Some(t) = threads {
        cmd.env("RAYON_NUM_THREADS", t.to_string());
    }
    cmd.output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn simulated(truth: &GroundTruth, observers: usize, per: usize, strategy: PairStrategy, seed: u64) -> Vec<ComparisonRecord> {
    simulate_experiment(
        truth,
        &SimulationConfig {
            n_observers: observers,
            comparisons_per_observer: per,
            pair_strategy: strategy,
            seed,
        },
    )
    .expect("valid simulation")
}

pub fn write_file(dir: &Path, name: &str, records: &[ComparisonRecord], format: RecordFormat) -> PathBuf {
    let path = dir.join(name);
    let mut bytes = Vec::new();
    write_records(&mut bytes, records, format).unwrap();
    std::fs::write(&path, bytes).unwrap();
    path
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// In-process annotation service with a frozen clock.
pub struct Api {
    app: Router,
}

impl Api {
    pub fn new() -> Self {
        let clock = Arc::new(ManualClock::new(Utc.with_ymd_and_hms(2026, 3, 1, 9, 0, 0).unwrap()));
        let service = Service::open(ServiceConfig {
            clock,
            ..ServiceConfig::default()
        })
        .unwrap();
        Api {
            app: router(Arc::new(service)),
        }
    }

    pub async fn raw(&self, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
        let mut req = Request::builder().method(method).uri(uri);
        let body = match body {
            Some(v) => {
                req = req.header("content-type", "application/json");
                Body::from(v.to_string())
            }
            None => Body::empty(),
        };
        let resp = self.app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
        let status = resp.status();
        (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
    }

    pub async fn call(&self, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let (status, bytes) = self.raw(method, uri, body).await;
        (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
    }

    /// Creates a study over `truth`'s items and answers `per` pairs for each
    /// of `observers` scripted Thurstone observers. Returns the study id and
    /// the number of accepted choices.
    pub async fn annotate(&self, truth: &GroundTruth, budget: usize, observers: usize, per: usize, seed: u64) -> (String, usize) {
        let items: Vec<Value> = truth
            .items
            .iter()
            .map(|id| json!({"id": id, "url": format!("https://assets.example/{id}.png")}))
            .collect();
        let (status, created) = self
            .call(
                Method::POST,
                "/studies",
                Some(json!({"condition": "overall", "items": items, "budget": budget, "seed": seed})),
            )
            .await;
        assert_eq!(status, StatusCode::CREATED, "{created}");
        let study = created["study_id"].as_str().unwrap().to_string();
        let mut rng = jodkit::seed::rng(seed);
        let mut accepted = 0;
        for o in 0..observers {
            let (_, session) = self
                .call(
                    Method::POST,
                    &format!("/studies/{study}/sessions"),
                    Some(json!({"observer_id": format!("obs{o:02}")})),
                )
                .await;
            let sid = session["session_id"].as_str().unwrap().to_string();
            for _ in 0..per {
                let (status, pair) = self.call(Method::GET, &format!("/sessions/{sid}/next-pair"), None).await;
                assert_eq!(status, StatusCode::OK, "{pair}");
                let a = pair["item_a"].as_str().unwrap().to_string();
                let b = pair["item_b"].as_str().unwrap().to_string();
                let q = |id: &str| truth.quality[truth.items.iter().position(|i| i == id).unwrap()];
                let winner = if rng.random::<f64>() < truth.choice_probability(q(&a), q(&b)) { a } else { b };
                let (status, ack) = self
                    .call(Method::POST, &format!("/sessions/{sid}/choice"), Some(json!({"winner": winner})))
                    .await;
                assert_eq!(status, StatusCode::OK, "{ack}");
                accepted += 1;
            }
        }
        (study, accepted)
    }

    pub async fn export(&self, study: &str) -> Vec<u8> {
        let (status, bytes) = self.raw(Method::GET, &format!("/studies/{study}/export"), None).await;
        assert_eq!(status, StatusCode::OK);
        bytes
    }

    pub async fn report(&self, study: &str, seed: u64, b: usize) -> Value {
        let (status, v) = self
            .call(Method::GET, &format!("/studies/{study}/report?seed={seed}&replicates={b}"), None)
            .await;
        assert_eq!(status, StatusCode::OK, "{v}");
        v
    }
}

pub fn runtime() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap()
}

/// Analysis fields shared by the CLI output and the service report.
pub fn without_input(mut v: Value) -> Value {
    v.as_object_mut().expect("report object").remove("input");
    v
}
