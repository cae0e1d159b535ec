//! Read-only JSON API over a workspace snapshot.
//!
//! The snapshot sits behind an `Arc` that readers clone and release at once; a
//! reload builds the new snapshot off to the side and swaps the pointer.

use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use hydrograph::{Comid, Direction};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::ServiceError;
use crate::views::{self, QueryError, View, WhatIf, NODE_CAP};
use crate::workspace::Snapshot;

pub const SNAPSHOT_HEADER: &str = "x-snapshot-id";

pub struct AppState {
    current: RwLock<Arc<Snapshot>>,
    dir: Option<PathBuf>,
    node_cap: usize,
}

impl AppState {
    pub fn new(snapshot: Snapshot, dir: Option<PathBuf>) -> Self {
        AppState { current: RwLock::new(Arc::new(snapshot)), dir, node_cap: NODE_CAP }
    }

    pub fn with_node_cap(mut self, cap: usize) -> Self {
        self.node_cap = cap;
        self
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        Arc::clone(&self.current.read().unwrap_or_else(|e| e.into_inner()))
    }

    /// Re-reads the workspace directory and swaps it in. On failure the old
    /// snapshot stays.
    pub fn reload(&self) -> Result<Arc<Snapshot>, ServiceError> {
        let dir = self
            .dir
            .as_ref()
            .ok_or_else(|| ServiceError::Invalid("snapshot was not loaded from a directory".into()))?;
        let fresh = Arc::new(Snapshot::load(dir)?);
        *self.current.write().unwrap_or_else(|e| e.into_inner()) = Arc::clone(&fresh);
        Ok(fresh)
    }
}

/// JSON body tagged with the snapshot it was computed from.
struct Reply {
    snapshot: String,
    status: StatusCode,
    body: Value,
}

impl Reply {
    fn ok(s: &Snapshot, body: Value) -> Self {
        Reply { snapshot: s.id.clone(), status: StatusCode::OK, body }
    }

    fn from_result(s: &Snapshot, r: Result<Value, QueryError>) -> Self {
        match r {
            Ok(body) => Reply::ok(s, body),
            Err(e) => {
                let status = match &e {
                    QueryError::UnknownNode(_) | QueryError::NoAggregation => StatusCode::NOT_FOUND,
                    QueryError::OutsideWatersheds => StatusCode::UNPROCESSABLE_ENTITY,
                    QueryError::BadRequest(_) => StatusCode::BAD_REQUEST,
                    QueryError::Failed(ServiceError::Analysis(_)) => StatusCode::UNPROCESSABLE_ENTITY,
                    QueryError::Failed(_) => StatusCode::INTERNAL_SERVER_ERROR,
                };
                Reply { snapshot: s.id.clone(), status, body: json!({"error": e.to_string()}) }
            }
        }
    }
}

impl IntoResponse for Reply {
    fn into_response(self) -> Response {
        let bytes = serde_json::to_vec(&self.body).unwrap_or_default();
        let mut res = (self.status, bytes).into_response();
        let headers = res.headers_mut();
        headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("application/json"));
        if let Ok(v) = HeaderValue::from_str(&self.snapshot) {
            headers.insert(SNAPSHOT_HEADER, v);
        }
        res
    }
}

#[derive(Debug, Default, Deserialize)]
struct ViewQuery {
    #[serde(default)]
    view: View,
}

#[derive(Debug, Default, Deserialize)]
struct NodesQuery {
    bbox: Option<String>,
    #[serde(default)]
    view: View,
}

fn comid(raw: &str) -> Result<Comid, QueryError> {
    raw.parse().map_err(|_| QueryError::BadRequest(format!("{raw:?} is not a COMID")))
}

type Shared = State<Arc<AppState>>;

async fn nodes(State(app): Shared, Query(q): Query<NodesQuery>) -> Reply {
    let s = app.snapshot();
    let r = q
        .bbox
        .as_deref()
        .map(views::parse_bbox)
        .transpose()
        .and_then(|b| views::nodes_in_bbox(&s, q.view, b, app.node_cap));
    Reply::from_result(&s, r)
}

async fn node(State(app): Shared, Path(raw): Path<String>, Query(q): Query<ViewQuery>) -> Reply {
    let s = app.snapshot();
    Reply::from_result(&s, comid(&raw).and_then(|c| views::node(&s, q.view, c)))
}

async fn upstream(State(app): Shared, Path(raw): Path<String>, Query(q): Query<ViewQuery>) -> Reply {
    let s = app.snapshot();
    Reply::from_result(&s, comid(&raw).and_then(|c| views::neighborhood(&s, q.view, c, Direction::Upstream)))
}

async fn downstream(State(app): Shared, Path(raw): Path<String>, Query(q): Query<ViewQuery>) -> Reply {
    let s = app.snapshot();
    Reply::from_result(&s, comid(&raw).and_then(|c| views::neighborhood(&s, q.view, c, Direction::Downstream)))
}

async fn summary(State(app): Shared, Path(raw): Path<String>) -> Reply {
    let s = app.snapshot();
    let r = match comid(&raw) {
        Ok(c) => {
            let snap = Arc::clone(&s);
            tokio::task::spawn_blocking(move || views::summary(&snap, c))
                .await
                .unwrap_or_else(|e| Err(ServiceError::Invalid(e.to_string()).into()))
        }
        Err(e) => Err(e),
    };
    Reply::from_result(&s, r)
}

async fn whatif(State(app): Shared, Json(req): Json<WhatIf>) -> Reply {
    let s = app.snapshot();
    Reply::from_result(&s, views::whatif(&s, &req))
}

async fn reload(State(app): Shared) -> Reply {
    let worker = Arc::clone(&app);
    match tokio::task::spawn_blocking(move || worker.reload()).await {
        Ok(Ok(s)) => Reply::ok(&s, json!({"snapshot_id": s.id})),
        Ok(Err(e)) => Reply::from_result(&app.snapshot(), Err(e.into())),
        Err(e) => Reply::from_result(&app.snapshot(), Err(ServiceError::Invalid(e.to_string()).into())),
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/nodes", get(nodes))
        .route("/node/{comid}", get(node))
        .route("/upstream/{comid}", get(upstream))
        .route("/downstream/{comid}", get(downstream))
        .route("/summary/{comid}", get(summary))
        .route("/whatif", post(whatif))
        .route("/reload", post(reload))
        .with_state(state)
}

pub async fn serve(state: Arc<AppState>, addr: std::net::SocketAddr) -> Result<(), ServiceError> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| ServiceError::io(std::path::Path::new(&addr.to_string()), e))?;
    let local = listener.local_addr().map_err(|e| ServiceError::io(std::path::Path::new("socket"), e))?;
    eprintln!("listening on http://{local}");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| ServiceError::io(std::path::Path::new("socket"), e))
}
