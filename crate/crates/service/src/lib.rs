//! Ranking API: `GET /health` and `POST /v1/rank` over in-memory indexes.
//!
//! Errors use the envelope `{"error": {"code", "message"}}` with status 400
//! for malformed requests, 404 for unknown indexes and 500 otherwise.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use odqa_core::ranker::store::load_index;
use odqa_core::ranker::{InvertedIndex, RankerError};
use odqa_core::reader::protocol::ErrorEnvelope;
use serde::{Deserialize, Serialize};

/// Requests asking for more results than this are rejected.
pub const MAX_TOP_K: usize = 1000;

#[derive(Clone, Default)]
pub struct AppState {
    indexes: Arc<BTreeMap<String, Arc<InvertedIndex>>>,
}

impl AppState {
    pub fn new(indexes: impl IntoIterator<Item = InvertedIndex>) -> Self {
        let map = indexes
            .into_iter()
            .map(|ix| (ix.snapshot_id().to_string(), Arc::new(ix)))
            .collect();
        AppState { indexes: Arc::new(map) }
    }

    /// Loads every index under `<root>/snapshots/`.
    pub fn load_dir(root: &Path) -> Result<Self, RankerError> {
        let mut indexes = Vec::new();
        let dir = root.join("snapshots");
        if dir.is_dir() {
            let mut entries: Vec<_> = std::fs::read_dir(&dir)?.collect::<Result<_, _>>()?;
            entries.sort_by_key(|e| e.file_name());
            for entry in entries {
                if entry.path().is_dir() {
                    indexes.push(load_index(&entry.path())?);
                }
            }
        }
        Ok(AppState::new(indexes))
    }

    pub fn index_ids(&self) -> impl Iterator<Item = &str> {
        self.indexes.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankRequest {
    pub index: String,
    pub query: String,
    pub top_k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankResult {
    pub passage_id: String,
    pub score: f64,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankResponse {
    pub results: Vec<RankResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub indexes: Vec<String>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            code: "bad_request",
            message: message.into(),
        }
    }

    fn not_found(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            code: "not_found",
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(ErrorEnvelope::new(self.code, self.message))).into_response()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/v1/rank", post(rank))
        .fallback(|| async { ApiError::not_found("no such route") })
        .with_state(state)
}

async fn health(State(state): State<AppState>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        indexes: state.index_ids().map(str::to_string).collect(),
    })
}

// The body is parsed by hand so malformed JSON gets the error envelope too.
async fn rank(State(state): State<AppState>, body: Bytes) -> Result<Json<RankResponse>, ApiError> {
    let req: RankRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))?;
    if req.top_k == 0 || req.top_k > MAX_TOP_K {
        return Err(ApiError::bad_request(format!("top_k must be in [1, {MAX_TOP_K}]")));
    }
    let index = state
        .indexes
        .get(&req.index)
        .cloned()
        .ok_or_else(|| ApiError::not_found(format!("unknown index `{}`", req.index)))?;
    let list = tokio::task::spawn_blocking(move || index.query("request", &req.query, req.top_k))
        .await
        .map_err(|e| ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            code: "internal",
            message: e.to_string(),
        })?;
    Ok(Json(RankResponse {
        results: list
            .entries
            .into_iter()
            .map(|e| RankResult {
                passage_id: e.passage_id,
                score: e.score,
                answer: e.text,
            })
            .collect(),
    }))
}

/// Serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
