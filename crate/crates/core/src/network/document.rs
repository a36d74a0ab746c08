//! JSON network and evidence documents.
//!
//! ```json
//! {"nodes": [
//!   {"id": "D", "label": "Disease", "values": ["d1", "d2"], "parents": [], "cpt": [0.6, 0.4]},
//!   {"id": "F", "label": "Feature", "values": ["t", "f"], "parents": ["D"], "cpt": [0.8, 0.2, 0.3, 0.7]}
//! ]}
//! ```
//!
//! An evidence document maps node ids to value labels: `{"F": "t"}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{BeliefNetwork, Evidence, NetworkBuilder, NodeDef};
use crate::error::{InferenceError, Result};
use crate::scalar::Probability;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDocument {
    pub nodes: Vec<NodeDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDocument {
    pub id: String,
    #[serde(default)]
    pub label: String,
    pub values: Vec<String>,
    #[serde(default)]
    pub parents: Vec<String>,
    pub cpt: Vec<f64>,
}

pub type EvidenceDocument = BTreeMap<String, String>;

fn parse_error(e: serde_json::Error) -> InferenceError {
    InferenceError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Parses and validates a network document.
pub fn load_network<T: Probability>(document: &str) -> Result<BeliefNetwork<T>> {
    let doc: NetworkDocument = serde_json::from_str(document).map_err(parse_error)?;
    doc.into_network()
}

/// Parses an evidence document against `net`.
pub fn load_evidence<T: Probability>(net: &BeliefNetwork<T>, document: &str) -> Result<Evidence> {
    let doc: EvidenceDocument = serde_json::from_str(document).map_err(parse_error)?;
    net.evidence_from_labels(doc.iter().map(|(k, v)| (k.as_str(), v.as_str())))
}

impl NetworkDocument {
    pub fn into_network<T: Probability>(self) -> Result<BeliefNetwork<T>> {
        let mut builder = NetworkBuilder::new();
        for node in self.nodes {
            let label = if node.label.is_empty() {
                node.id.clone()
            } else {
                node.label
            };
            builder.push(
                NodeDef {
                    id: node.id,
                    label,
                    values: node.values,
                },
                node.parents,
                node.cpt,
            );
        }
        builder.build()
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }
}

impl<T: Probability> BeliefNetwork<T> {
    pub fn to_document(&self) -> NetworkDocument {
        NetworkDocument {
            nodes: self
                .node_ids()
                .map(|id| {
                    let def = self.node(id);
                    NodeDocument {
                        id: def.id.clone(),
                        label: def.label.clone(),
                        values: def.values.clone(),
                        parents: self.parents(id).iter().map(|p| self.node(*p).id.clone()).collect(),
                        cpt: self.cpt(id).entries().iter().map(|v| v.as_f64()).collect(),
                    }
                })
                .collect(),
        }
    }
}
