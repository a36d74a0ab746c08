//! JSON snapshot of uploaded networks and session histories. Sessions are
//! restored by replaying their histories.

use std::io;
use std::path::Path;
use std::sync::atomic::Ordering;

use adinfer::network::NetworkDocument;
use serde::{Deserialize, Serialize};

use crate::session::{Observation, SessionRequest};
use crate::Service;

#[derive(Debug, Default, Serialize, Deserialize)]
pub(crate) struct StateFile {
    networks: Vec<StoredNetwork>,
    sessions: Vec<StoredSession>,
}

#[derive(Debug, Serialize, Deserialize)]
struct StoredNetwork {
    id: String,
    document: NetworkDocument,
}

#[derive(Debug, Serialize, Deserialize)]
struct StoredSession {
    id: String,
    request: SessionRequest,
    history: Vec<Observation>,
}

fn invalid(e: impl ToString) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, e.to_string())
}

pub(crate) fn read(path: &Path) -> io::Result<StateFile> {
    serde_json::from_str(&std::fs::read_to_string(path)?).map_err(invalid)
}

/// Writes to a sibling temp file, then renames over `path`.
pub(crate) fn write(service: &Service, path: &Path) -> io::Result<()> {
    let inner = &service.inner;
    let networks = {
        let uploaded = inner.uploaded.lock().expect("upload lock");
        let all = inner.networks.read().expect("network lock");
        uploaded
            .iter()
            .filter_map(|id| all.get(id))
            .map(|n| StoredNetwork {
                id: n.id.clone(),
                document: n.document.clone(),
            })
            .collect()
    };
    let sessions = {
        let all = inner.sessions.read().expect("session lock");
        all.values()
            .map(|slot| {
                let view = slot.snapshot();
                StoredSession {
                    id: view.id.clone(),
                    request: SessionRequest {
                        network_id: view.network_id.clone(),
                        mode: view.mode,
                        policy: view.policy,
                        diagnosis: Some(view.diagnosis.clone()),
                    },
                    history: view.history.clone(),
                }
            })
            .collect()
    };
    let text = serde_json::to_string_pretty(&StateFile { networks, sessions }).map_err(invalid)?;
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, text)?;
    std::fs::rename(tmp, path)
}

pub(crate) fn restore(service: &Service, state: &StateFile) -> io::Result<()> {
    for n in &state.networks {
        service.add_network(Some(n.id.clone()), n.document.clone()).map_err(|e| invalid(e.body.message))?;
    }
    let mut next = 1;
    for s in &state.sessions {
        service
            .insert_session(s.id.clone(), s.request.clone(), &s.history)
            .map_err(|e| invalid(format!("session {}: {}", s.id, e.body.message)))?;
        if let Some(n) = s.id.strip_prefix('s').and_then(|n| n.parse::<u64>().ok()) {
            next = next.max(n + 1);
        }
    }
    service.inner.next_session.store(next, Ordering::Relaxed);
    Ok(())
}
