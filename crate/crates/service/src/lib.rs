//! Diagnosis sessions over HTTP.
//!
//! | route | body | reply |
//! |---|---|---|
//! | `GET /networks` | | network summaries |
//! | `POST /networks` | network document, optional `id` | 201, summary |
//! | `POST /sessions` | `{network_id, mode, policy?, diagnosis?}` | 201, session |
//! | `GET /sessions/{id}` | | session |
//! | `POST /sessions/{id}/observations` | `{feature, value}` | update |
//! | `DELETE /sessions/{id}/observations/{feature}` | | update |
//!
//! Errors are `{code, message}` with 404 for unknown ids, 409 for a
//! feature observed twice and 422 for impossible evidence. Malformed input
//! (unknown feature or value, bad mode) is a 400.
//!
//! Each session has a single writer. Readers get the last published
//! [`SessionView`], which is swapped in whole after every change.

pub mod error;
pub mod registry;
pub mod session;
mod store;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use adinfer::network::NetworkDocument;
use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;

pub use error::{ApiError, ErrorBody};
pub use registry::{load_dir, NetworkEntry, NetworkSummary, Portion};
pub use session::{DifferentialEntry, EngineMode, Observation, Policy, Session, SessionRequest, SessionView, Update};

struct SessionSlot {
    writer: Mutex<Session>,
    snapshot: RwLock<Arc<SessionView>>,
}

impl SessionSlot {
    fn snapshot(&self) -> Arc<SessionView> {
        Arc::clone(&self.snapshot.read().expect("snapshot lock"))
    }
}

struct Inner {
    networks: RwLock<BTreeMap<String, Arc<NetworkEntry>>>,
    /// Ids of networks added over HTTP; only these are persisted.
    uploaded: Mutex<Vec<String>>,
    sessions: RwLock<BTreeMap<String, Arc<SessionSlot>>>,
    next_session: AtomicU64,
    next_network: AtomicU64,
    state_file: Option<PathBuf>,
    save_lock: Mutex<()>,
}

/// Shared service state; cheap to clone.
#[derive(Clone)]
pub struct Service {
    inner: Arc<Inner>,
}

#[derive(Deserialize)]
struct Upload {
    #[serde(default)]
    id: Option<String>,
    #[serde(flatten)]
    document: NetworkDocument,
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("invalid_request", e.to_string()))
}

impl Service {
    pub fn new(networks: BTreeMap<String, NetworkEntry>) -> Self {
        Self {
            inner: Arc::new(Inner {
                networks: RwLock::new(networks.into_iter().map(|(k, v)| (k, Arc::new(v))).collect()),
                uploaded: Mutex::new(Vec::new()),
                sessions: RwLock::new(BTreeMap::new()),
                next_session: AtomicU64::new(1),
                next_network: AtomicU64::new(1),
                state_file: None,
                save_lock: Mutex::new(()),
            }),
        }
    }

    /// Like [`new`](Self::new), keeping sessions and uploaded networks in a
    /// JSON file. An existing file is loaded and its sessions replayed.
    pub fn with_state_file(networks: BTreeMap<String, NetworkEntry>, path: PathBuf) -> std::io::Result<Self> {
        let mut service = Self::new(networks);
        // Restore before the path is set, so replaying does not rewrite the file.
        if path.exists() {
            store::restore(&service, &store::read(&path)?)?;
        }
        Arc::get_mut(&mut service.inner).expect("no clones yet").state_file = Some(path);
        Ok(service)
    }

    pub fn router(self) -> Router {
        Router::new()
            .route("/networks", get(list_networks).post(upload_network))
            .route("/sessions", post(create_session))
            .route("/sessions/{id}", get(get_session))
            .route("/sessions/{id}/observations", post(add_observation))
            .route("/sessions/{id}/observations/{feature}", delete(retract_observation))
            .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route") })
            .with_state(self)
    }

    pub fn network(&self, id: &str) -> Result<Arc<NetworkEntry>, ApiError> {
        let networks = self.inner.networks.read().expect("network lock");
        networks.get(id).cloned().ok_or_else(|| ApiError::not_found("network", id))
    }

    pub fn networks(&self) -> Vec<NetworkSummary> {
        let networks = self.inner.networks.read().expect("network lock");
        networks.values().map(|n| n.summary()).collect()
    }

    pub fn add_network(&self, id: Option<String>, document: NetworkDocument) -> Result<NetworkSummary, ApiError> {
        let id = match id {
            Some(id) => id,
            None => loop {
                let candidate = format!("net-{}", self.inner.next_network.fetch_add(1, Ordering::Relaxed));
                if !self.inner.networks.read().expect("network lock").contains_key(&candidate) {
                    break candidate;
                }
            },
        };
        let entry = NetworkEntry::new(id.clone(), document)?;
        let summary = entry.summary();
        {
            let mut networks = self.inner.networks.write().expect("network lock");
            if networks.contains_key(&id) {
                return Err(ApiError::new(StatusCode::CONFLICT, "conflict", format!("network `{id}` already exists")));
            }
            networks.insert(id.clone(), Arc::new(entry));
        }
        self.inner.uploaded.lock().expect("upload lock").push(id);
        self.save()?;
        Ok(summary)
    }

    pub fn create_session(&self, request: SessionRequest) -> Result<SessionView, ApiError> {
        let id = format!("s{}", self.inner.next_session.fetch_add(1, Ordering::Relaxed));
        self.insert_session(id, request, &[])
    }

    fn insert_session(&self, id: String, request: SessionRequest, history: &[Observation]) -> Result<SessionView, ApiError> {
        let entry = self.network(&request.network_id)?;
        let session = Session::restore(id.clone(), &entry, request, history)?;
        let view = Arc::new(session.view());
        let slot = SessionSlot {
            writer: Mutex::new(session),
            snapshot: RwLock::new(Arc::clone(&view)),
        };
        self.inner.sessions.write().expect("session lock").insert(id, Arc::new(slot));
        self.save()?;
        Ok((*view).clone())
    }

    fn slot(&self, id: &str) -> Result<Arc<SessionSlot>, ApiError> {
        let sessions = self.inner.sessions.read().expect("session lock");
        sessions.get(id).cloned().ok_or_else(|| ApiError::not_found("session", id))
    }

    pub fn session(&self, id: &str) -> Result<Arc<SessionView>, ApiError> {
        Ok(self.slot(id)?.snapshot())
    }

    /// Runs `change` under the session's writer lock and publishes the new
    /// snapshot if it succeeds.
    fn mutate(&self, id: &str, change: impl FnOnce(&mut Session) -> Result<Update, ApiError>) -> Result<Update, ApiError> {
        let slot = self.slot(id)?;
        let update = {
            let mut session = slot.writer.lock().expect("session writer");
            let update = change(&mut session)?;
            *slot.snapshot.write().expect("snapshot lock") = Arc::new(session.view());
            update
        };
        self.save()?;
        Ok(update)
    }

    pub fn observe(&self, id: &str, observation: &Observation) -> Result<Update, ApiError> {
        self.mutate(id, |s| s.observe(&observation.feature, &observation.value))
    }

    pub fn retract(&self, id: &str, feature: &str) -> Result<Update, ApiError> {
        self.mutate(id, |s| s.retract(feature))
    }

    fn save(&self) -> Result<(), ApiError> {
        let Some(path) = &self.inner.state_file else {
            return Ok(());
        };
        let _guard = self.inner.save_lock.lock().expect("save lock");
        store::write(self, path)
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "persistence", e.to_string()))
    }
}

async fn list_networks(State(service): State<Service>) -> Json<Vec<NetworkSummary>> {
    Json(service.networks())
}

async fn upload_network(State(service): State<Service>, body: Bytes) -> Result<(StatusCode, Json<NetworkSummary>), ApiError> {
    let upload: Upload = parse(&body)?;
    let summary = service.add_network(upload.id, upload.document)?;
    Ok((StatusCode::CREATED, Json(summary)))
}

async fn create_session(State(service): State<Service>, body: Bytes) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let request: SessionRequest = parse(&body)?;
    Ok((StatusCode::CREATED, Json(service.create_session(request)?)))
}

async fn get_session(State(service): State<Service>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    Ok(Json((*service.session(&id)?).clone()))
}

async fn add_observation(
    State(service): State<Service>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Update>, ApiError> {
    let observation: Observation = parse(&body)?;
    Ok(Json(service.observe(&id, &observation)?))
}

async fn retract_observation(
    State(service): State<Service>,
    Path((id, feature)): Path<(String, String)>,
) -> Result<Json<Update>, ApiError> {
    Ok(Json(service.retract(&id, &feature)?))
}

/// Serves `service` on `0.0.0.0:port` until the process stops.
pub async fn serve(service: Service, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    axum::serve(listener, service.router()).await
}
