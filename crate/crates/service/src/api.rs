//! Request and response bodies.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use jodkit::consistency::AnalysisReport;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SESSION_SECONDS: u64 = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestItem {
    pub id: String,
    #[serde(default)]
    pub url: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CreateStudy {
    #[serde(default)]
    pub id: Option<String>,
    pub condition: String,
    pub items: Vec<ManifestItem>,
    pub budget: u64,
    #[serde(default = "default_session_seconds")]
    pub session_duration_limit: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_session_seconds() -> u64 {
    DEFAULT_SESSION_SECONDS
}

/// A validated study definition, as persisted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyDefinition {
    pub id: String,
    pub condition: String,
    /// Item identifier → asset URL.
    pub assets: BTreeMap<String, String>,
    pub budget: u64,
    pub session_duration_limit: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyCreated {
    pub study_id: String,
    pub items: Vec<String>,
    pub budget: u64,
    pub session_duration_limit: u64,
    pub revision: u64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CreateSession {
    pub observer_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub study_id: String,
    pub observer_id: String,
    pub expires_at: DateTime<Utc>,
    pub revision: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResponse {
    pub session_id: String,
    pub item_a: String,
    pub item_b: String,
    pub asset_a: String,
    pub asset_b: String,
    pub expected_gain: f64,
    pub answered: u64,
    pub budget_remaining: u64,
    pub revision: u64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Choice {
    pub winner: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChoiceAccepted {
    pub session_id: String,
    pub record_index: u64,
    pub answered: u64,
    pub revision: u64,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct ReportQuery {
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    pub level: Option<f64>,
    pub alpha: Option<f64>,
    pub resolution: Option<f64>,
}

/// Why an analysis could not run on the records so far.
#[derive(Debug, Clone, Serialize)]
pub struct PartialDiagnostics {
    pub reason: String,
    pub records: usize,
    pub observers: usize,
    pub connected: bool,
    pub components: Vec<Vec<String>>,
}

#[derive(Debug, Serialize)]
pub struct ReportResponse {
    pub study_id: String,
    pub revision: u64,
    pub complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<AnalysisReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<PartialDiagnostics>,
}
