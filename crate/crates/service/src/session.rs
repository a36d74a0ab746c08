//! One diagnosis session: an engine, the ordered observation history and
//! the differential derived from them.

use std::sync::Arc;

use adinfer::bounded::DEFAULT_THRESHOLD;
use adinfer::{Bounded, Ensemble, Evidence, Forest, IntervalPosterior, Network, NodeId, RetentionPolicy};
use axum::http::StatusCode;
use serde::{Deserialize, Serialize};

use crate::error::ApiError;
use crate::registry::{NetworkEntry, Prototype};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineMode {
    Ad,
    Ctp,
    Bounded,
}

/// Retention policy for bounded sessions: `{"top_k": 5}` or
/// `{"threshold": 0.01}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    TopK(usize),
    Threshold(f64),
}

impl From<Policy> for RetentionPolicy {
    fn from(p: Policy) -> Self {
        match p {
            Policy::TopK(k) => RetentionPolicy::TopK(k),
            Policy::Threshold(t) => RetentionPolicy::Threshold(t),
        }
    }
}

/// Body of `POST /sessions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRequest {
    pub network_id: String,
    pub mode: EngineMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<Policy>,
    /// Diagnosis node; defaults to the network's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnosis: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub feature: String,
    pub value: String,
}

/// One row of the ranked differential: a probability in point modes, an
/// interval in bounded mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferentialEntry {
    pub diagnosis: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
}

/// Response to adding or retracting an observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Update {
    pub differential: Vec<DifferentialEntry>,
    pub touched_portions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_uncertain: Option<bool>,
}

/// Read-only copy of a session, replaced as a whole after every change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub network_id: String,
    pub mode: EngineMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<Policy>,
    pub diagnosis: String,
    pub history: Vec<Observation>,
    pub differential: Vec<DifferentialEntry>,
    pub touched_portions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_uncertain: Option<bool>,
}

#[derive(Debug, Clone)]
enum Engine {
    Ad(Ensemble),
    Ctp(Forest),
    Bounded(Bounded),
}

#[derive(Debug, Clone)]
pub struct Session {
    id: String,
    network_id: String,
    request: SessionRequest,
    network: Arc<Network>,
    prototype: Prototype,
    engine: Engine,
    history: Vec<(NodeId, usize)>,
    last: Update,
}

impl Session {
    pub fn start(id: String, entry: &NetworkEntry, request: SessionRequest) -> Result<Self, ApiError> {
        let policy = match (request.mode, request.policy) {
            (EngineMode::Bounded, p) => Some(p.unwrap_or(Policy::Threshold(DEFAULT_THRESHOLD))),
            (_, None) => None,
            (mode, Some(_)) => {
                return Err(ApiError::bad_request(
                    "invalid_mode",
                    format!("a retention policy only applies to bounded mode, not {mode:?}"),
                ))
            }
        };
        if let Some(p) = policy {
            RetentionPolicy::from(p).validate()?;
        }
        let prototype = entry.prototype_for(request.diagnosis.as_deref())?;
        let mut session = Session {
            id,
            network_id: entry.id.clone(),
            request: SessionRequest { policy, ..request },
            network: Arc::clone(&entry.network),
            engine: Engine::Ctp(prototype.forest.clone()),
            prototype,
            history: Vec::new(),
            last: Update {
                differential: Vec::new(),
                touched_portions: Vec::new(),
                rank_uncertain: None,
            },
        };
        session.engine = session.fresh_engine()?;
        let (differential, rank_uncertain) = session.differential()?;
        session.last.differential = differential;
        session.last.rank_uncertain = rank_uncertain;
        Ok(session)
    }

    fn fresh_engine(&self) -> Result<Engine, ApiError> {
        Ok(match self.request.mode {
            EngineMode::Ad => Engine::Ad(self.prototype.ensemble.clone()),
            EngineMode::Ctp => Engine::Ctp(self.prototype.forest.clone()),
            EngineMode::Bounded => {
                let policy = self.request.policy.expect("bounded sessions carry a policy");
                Engine::Bounded(Bounded::new(self.prototype.ensemble.clone(), policy.into())?)
            }
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn request(&self) -> &SessionRequest {
        &self.request
    }

    pub fn evidence(&self) -> Evidence {
        self.history.iter().copied().collect()
    }

    /// Resolves a feature/value pair against the network.
    fn resolve(&self, feature: &str, value: &str) -> Result<(NodeId, usize), ApiError> {
        let node = self
            .network
            .node_id(feature)
            .ok_or_else(|| ApiError::bad_request("unknown_feature", format!("no feature `{feature}`")))?;
        if node == self.prototype.diagnosis {
            return Err(ApiError::bad_request(
                "diagnosis_observed",
                format!("`{feature}` is the diagnosis node and cannot be observed"),
            ));
        }
        let v = self.network.node(node).value_index(value).ok_or_else(|| {
            ApiError::bad_request("unknown_value", format!("feature `{feature}` has no value `{value}`"))
        })?;
        Ok((node, v))
    }

    /// Absorbs one observation. On any error the session is unchanged.
    pub fn observe(&mut self, feature: &str, value: &str) -> Result<Update, ApiError> {
        let (node, v) = self.resolve(feature, value)?;
        if self.history.iter().any(|(n, _)| *n == node) {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "conflict",
                format!("feature `{feature}` is already observed"),
            ));
        }
        let touched = self.absorb(node, v)?;
        self.history.push((node, v));
        self.refresh(touched)
    }

    /// Removes an observation and replays the rest of the history on fresh
    /// engine state.
    pub fn retract(&mut self, feature: &str) -> Result<Update, ApiError> {
        let node = self
            .network
            .node_id(feature)
            .ok_or_else(|| ApiError::bad_request("unknown_feature", format!("no feature `{feature}`")))?;
        let pos = self
            .history
            .iter()
            .position(|(n, _)| *n == node)
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "not_observed", format!("feature `{feature}` is not observed")))?;
        let mut replay = self.clone();
        replay.history.remove(pos);
        replay.replay()?;
        *self = replay;
        let touched = self.prototype.portion_of(node).map(|p| vec![p.id.clone()]).unwrap_or_default();
        self.refresh(touched)
    }

    /// Rebuilds the engine from the prototype and re-absorbs the history in
    /// order.
    pub fn replay(&mut self) -> Result<(), ApiError> {
        self.engine = self.fresh_engine()?;
        for (node, v) in self.history.clone() {
            self.absorb(node, v)?;
        }
        Ok(())
    }

    /// Starts a session and replays `history` into it.
    pub fn restore(
        id: String,
        entry: &NetworkEntry,
        request: SessionRequest,
        history: &[Observation],
    ) -> Result<Self, ApiError> {
        let mut session = Self::start(id, entry, request)?;
        for o in history {
            session.observe(&o.feature, &o.value)?;
        }
        Ok(session)
    }

    fn absorb(&mut self, node: NodeId, value: usize) -> Result<Vec<String>, ApiError> {
        let ev = Evidence::new().with(node, value);
        let touched = match &mut self.engine {
            Engine::Ad(e) => {
                e.absorb_evidence(&ev)?;
                let summary = e.propagation_summary().cloned().unwrap_or_default();
                self.prototype.portions_for_components(&summary.touched_components)
            }
            Engine::Bounded(b) => {
                b.bounded_absorb(&ev)?;
                let summary = b.propagation_summary().cloned().unwrap_or_default();
                self.prototype.portions_for_components(&summary.touched_components)
            }
            // The full forest has no diagnosis-free portions of its own; report
            // the portion the feature belongs to.
            Engine::Ctp(f) => {
                f.absorb(&ev)?;
                self.prototype.portion_of(node).map(|p| vec![p.id.clone()]).unwrap_or_default()
            }
        };
        Ok(touched)
    }

    fn refresh(&mut self, touched: Vec<String>) -> Result<Update, ApiError> {
        let (differential, rank_uncertain) = self.differential()?;
        self.last = Update {
            differential,
            touched_portions: touched,
            rank_uncertain,
        };
        Ok(self.last.clone())
    }

    fn differential(&self) -> Result<(Vec<DifferentialEntry>, Option<bool>), ApiError> {
        let labels = &self.network.node(self.prototype.diagnosis).values;
        let point = |p: Vec<f64>| {
            let mut rows: Vec<DifferentialEntry> = labels
                .iter()
                .zip(p)
                .map(|(l, p)| DifferentialEntry {
                    diagnosis: l.clone(),
                    p: Some(p),
                    lower: None,
                    upper: None,
                })
                .collect();
            // Stable sort keeps declaration order among ties.
            rows.sort_by(|a, b| b.p.partial_cmp(&a.p).expect("probabilities are finite"));
            rows
        };
        Ok(match &self.engine {
            Engine::Ad(e) => (point(e.cutset_posterior()), None),
            Engine::Ctp(f) => (point(f.node_posterior(self.prototype.diagnosis)?), None),
            Engine::Bounded(b) => {
                let IntervalPosterior { bounds, rank_uncertain } = b.intervals()?;
                let mut rows: Vec<DifferentialEntry> = labels
                    .iter()
                    .zip(bounds)
                    .map(|(l, b)| DifferentialEntry {
                        diagnosis: l.clone(),
                        p: None,
                        lower: Some(b.lower),
                        upper: Some(b.upper),
                    })
                    .collect();
                rows.sort_by(|a, b| {
                    let key = |r: &DifferentialEntry| (r.lower.unwrap(), r.upper.unwrap());
                    key(b).partial_cmp(&key(a)).expect("bounds are finite")
                });
                (rows, Some(rank_uncertain))
            }
        })
    }

    pub fn view(&self) -> SessionView {
        SessionView {
            id: self.id.clone(),
            network_id: self.network_id.clone(),
            mode: self.request.mode,
            policy: self.request.policy,
            diagnosis: self.network.node(self.prototype.diagnosis).id.clone(),
            history: self
                .history
                .iter()
                .map(|&(n, v)| {
                    let def = self.network.node(n);
                    Observation {
                        feature: def.id.clone(),
                        value: def.values[v].clone(),
                    }
                })
                .collect(),
            differential: self.last.differential.clone(),
            touched_portions: self.last.touched_portions.clone(),
            rank_uncertain: self.last.rank_uncertain,
        }
    }
}
