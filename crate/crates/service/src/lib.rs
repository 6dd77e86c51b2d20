//! HTTP service for live forced-choice annotation sessions.
//!
//! Pairs are chosen by expected information gain over the study's online
//! Gaussian beliefs; every accepted choice is appended to a durable record
//! log before it is acknowledged. Every JSON response carries the study
//! revision: 1 at creation plus one per accepted choice. CSV exports carry
//! it in the `x-study-revision` header.

pub mod api;
pub mod clock;
mod error;
mod state;
mod store;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderName, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};

pub use error::{ApiError, RevisionedError};
pub use state::{Service, ServiceConfig};

use api::*;

pub const REVISION_HEADER: &str = "x-study-revision";

type Shared = Arc<Service>;

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, RevisionedError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ApiError::Unprocessable(e.body_text()).into())
}

async fn create_study(
    State(svc): State<Shared>,
    payload: Result<Json<CreateStudy>, JsonRejection>,
) -> Result<(StatusCode, Json<StudyCreated>), RevisionedError> {
    let created = svc.create_study(body(payload)?)?;
    log::info!("created study `{}`", created.study_id);
    Ok((StatusCode::CREATED, Json(created)))
}

async fn create_session(
    State(svc): State<Shared>,
    Path(study_id): Path<String>,
    payload: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionCreated>), RevisionedError> {
    let created = svc.create_session(&study_id, body(payload)?)?;
    Ok((StatusCode::CREATED, Json(created)))
}

async fn next_pair(
    State(svc): State<Shared>,
    Path(session_id): Path<String>,
) -> Result<Json<PairResponse>, RevisionedError> {
    Ok(Json(svc.next_pair(&session_id)?))
}

async fn submit_choice(
    State(svc): State<Shared>,
    Path(session_id): Path<String>,
    payload: Result<Json<Choice>, JsonRejection>,
) -> Result<Json<ChoiceAccepted>, RevisionedError> {
    Ok(Json(svc.submit_choice(&session_id, body(payload)?)?))
}

async fn export(State(svc): State<Shared>, Path(study_id): Path<String>) -> Result<Response, RevisionedError> {
    let (revision, csv) = svc.export(&study_id)?;
    Ok((
        [
            (header::CONTENT_TYPE, HeaderValue::from_static("text/csv; charset=utf-8")),
            (HeaderName::from_static(REVISION_HEADER), HeaderValue::from(revision)),
        ],
        csv,
    )
        .into_response())
}

async fn report(
    State(svc): State<Shared>,
    Path(study_id): Path<String>,
    Query(query): Query<ReportQuery>,
) -> Result<Json<ReportResponse>, RevisionedError> {
    let input = svc.report_input(&study_id, &query)?;
    let revision = input.revision;
    let response = tokio::task::spawn_blocking(move || input.run())
        .await
        .map_err(|e| ApiError::Internal(format!("analysis task failed: {e}")).with_revision(Some(revision)))?
        .map_err(|e| e.with_revision(Some(revision)))?;
    Ok(Json(response))
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/studies", post(create_study))
        .route("/studies/{id}/sessions", post(create_session))
        .route("/studies/{id}/export", get(export))
        .route("/studies/{id}/report", get(report))
        .route("/sessions/{id}/next-pair", get(next_pair))
        .route("/sessions/{id}/choice", post(submit_choice))
        .with_state(service)
}

/// Serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let service = Service::open(config).map_err(|e| std::io::Error::other(e.to_string()))?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(service)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
