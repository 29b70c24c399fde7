//! JSON-over-HTTP front end for a shared [`Engine`].

use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use nlu_core::engine::Engine;
use nlu_core::taskmodels::Task;
use nlu_core::Error;
use serde::{Deserialize, Serialize};
use serde_json::json;

/// Largest accepted request body.
pub const MAX_BODY_BYTES: usize = 16 * 1024;

/// Published schema of a successful `POST /api/analyze` body.
pub const RESPONSE_SCHEMA: &str = include_str!("../schema/analysis_response.schema.json");

#[derive(Debug, Clone)]
enum Slot {
    Loading { missing: Vec<String> },
    Ready(Arc<Engine>),
}

/// Shared service state. The engine is swapped as a whole; requests in
/// flight keep the engine they started with.
#[derive(Debug, Clone)]
pub struct AppState {
    slot: Arc<RwLock<Slot>>,
}

impl Default for AppState {
    fn default() -> Self {
        AppState::loading(Task::ALL.iter().map(|t| t.name().to_owned()).collect())
    }
}

impl AppState {
    pub fn loading(missing: Vec<String>) -> Self {
        AppState {
            slot: Arc::new(RwLock::new(Slot::Loading { missing })),
        }
    }

    pub fn ready(engine: Engine) -> Self {
        AppState {
            slot: Arc::new(RwLock::new(Slot::Ready(Arc::new(engine)))),
        }
    }

    pub fn install(&self, engine: Engine) {
        *self.slot.write().unwrap_or_else(|e| e.into_inner()) = Slot::Ready(Arc::new(engine));
    }

    /// Record which bundles are still missing after a failed load.
    pub fn mark_missing(&self, missing: Vec<String>) {
        let mut slot = self.slot.write().unwrap_or_else(|e| e.into_inner());
        if matches!(*slot, Slot::Loading { .. }) {
            *slot = Slot::Loading { missing };
        }
    }

    /// The engine, or the tasks still missing.
    fn engine(&self) -> Result<Arc<Engine>, Vec<String>> {
        match &*self.slot.read().unwrap_or_else(|e| e.into_inner()) {
            Slot::Ready(e) => Ok(Arc::clone(e)),
            Slot::Loading { missing } => Err(missing.clone()),
        }
    }
}

fn not_ready(missing: &[String]) -> Response {
    json_response(
        StatusCode::SERVICE_UNAVAILABLE,
        &json!({"error": "engine not ready", "missing": missing}),
    )
}

#[derive(Deserialize)]
struct AnalyzeRequest {
    text: Option<String>,
}

#[derive(Serialize)]
struct Health<'a> {
    status: &'static str,
    tasks: Vec<&'static str>,
    model_versions: &'a std::collections::BTreeMap<String, String>,
}

fn json_response<T: Serialize>(status: StatusCode, body: &T) -> Response {
    match serde_json::to_vec(body) {
        Ok(bytes) => (status, [(header::CONTENT_TYPE, "application/json")], bytes).into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, &e.to_string()),
    }
}

fn error(status: StatusCode, message: &str) -> Response {
    let body = serde_json::to_vec(&json!({ "error": message })).unwrap_or_default();
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn analyze(State(state): State<AppState>, body: Result<Bytes, BytesRejection>) -> Response {
    let body = match body {
        Ok(b) => b,
        Err(rejection) => {
            let status = rejection.status();
            let message = if status == StatusCode::PAYLOAD_TOO_LARGE {
                format!("request body exceeds {MAX_BODY_BYTES} bytes")
            } else {
                rejection.body_text()
            };
            return error(status, &message);
        }
    };
    let engine = match state.engine() {
        Ok(e) => e,
        Err(missing) => return not_ready(&missing),
    };
    let request: AnalyzeRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => {
            return error(
                StatusCode::BAD_REQUEST,
                &format!("body must be a JSON object with a `text` string: {e}"),
            )
        }
    };
    let Some(text) = request.text else {
        return error(StatusCode::BAD_REQUEST, "missing field `text`");
    };
    let result = tokio::task::spawn_blocking(move || engine.analyze(&text)).await;
    match result {
        Ok(Ok(record)) => json_response(StatusCode::OK, &record),
        Ok(Err(Error::Validation(m))) => error(StatusCode::BAD_REQUEST, &m),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, &e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, &e.to_string()),
    }
}

async fn health(State(state): State<AppState>) -> Response {
    match state.engine() {
        Ok(engine) => json_response(
            StatusCode::OK,
            &Health {
                status: "ok",
                tasks: Task::ALL.iter().map(|t| t.name()).collect(),
                model_versions: engine.model_versions(),
            },
        ),
        Err(missing) => not_ready(&missing),
    }
}

async fn labels(State(state): State<AppState>) -> Response {
    match state.engine() {
        Ok(engine) => json_response(StatusCode::OK, &engine.labels()),
        Err(missing) => not_ready(&missing),
    }
}

async fn not_found() -> Response {
    error(StatusCode::NOT_FOUND, "no such endpoint")
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/analyze", post(analyze))
        .route("/api/health", get(health))
        .route("/api/labels", get(labels))
        .fallback(not_found)
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(state)
}

/// Bind `addr` and serve until the task is cancelled.
pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    serve_on(state, listener).await
}

pub async fn serve_on(state: AppState, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}
