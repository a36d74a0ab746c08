use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use adinfer::ad::{init_ensemble, select_cutset, CutsetStrategy};
use adinfer::network::NetworkDocument;
use adinfer::{Ensemble, Forest, Network, NodeId};
use serde::Serialize;

use crate::error::ApiError;

/// Group of features that evidence propagates through together once the
/// diagnosis node is fixed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Portion {
    pub id: String,
    pub features: Vec<String>,
}

/// Everything a session needs that does not depend on its evidence: the
/// calibrated starting engines and the portion layout.
#[derive(Debug, Clone)]
pub struct Prototype {
    pub diagnosis: NodeId,
    pub ensemble: Ensemble,
    pub forest: Forest,
    pub portions: Vec<Portion>,
    /// Portion index of each node; `None` for the diagnosis node.
    portion_of: Vec<Option<usize>>,
    /// Portion index of each component of the conditioned forest.
    portion_of_component: Vec<usize>,
}

impl Prototype {
    pub fn new(net: &Network, diagnosis: NodeId) -> Result<Self, ApiError> {
        let id = net.node(diagnosis).id.clone();
        let cutset = select_cutset(net, &CutsetStrategy::Explicit(vec![id]))?;
        let ensemble = init_ensemble(net, cutset)?;
        let forest = Forest::from_network(net)?;

        let structure = ensemble.structure();
        let mut order: Vec<usize> = (0..structure.components().len()).collect();
        order.sort_by_key(|&c| structure.components()[c].nodes.iter().min().copied());
        let mut portion_of = vec![None; net.node_count()];
        let mut portion_of_component = vec![0; order.len()];
        let mut portions = Vec::with_capacity(order.len());
        for (p, &c) in order.iter().enumerate() {
            let mut nodes = structure.components()[c].nodes.clone();
            nodes.sort();
            for n in &nodes {
                portion_of[n.0] = Some(p);
            }
            portion_of_component[c] = p;
            portions.push(Portion {
                id: format!("portion-{p}"),
                features: nodes.iter().map(|n| net.node(*n).id.clone()).collect(),
            });
        }
        Ok(Self {
            diagnosis,
            ensemble,
            forest,
            portions,
            portion_of,
            portion_of_component,
        })
    }

    pub fn portion_of(&self, node: NodeId) -> Option<&Portion> {
        self.portion_of.get(node.0).copied().flatten().map(|p| &self.portions[p])
    }

    /// Portion ids for conditioned-forest components, in portion order.
    pub fn portions_for_components(&self, components: &[adinfer::ComponentId]) -> Vec<String> {
        let mut idx: Vec<usize> = components.iter().map(|c| self.portion_of_component[c.0]).collect();
        idx.sort_unstable();
        idx.dedup();
        idx.into_iter().map(|p| self.portions[p].id.clone()).collect()
    }
}

/// Default diagnosis node: the node with the most children, ties to the
/// earlier declared one.
pub fn default_diagnosis(net: &Network) -> NodeId {
    net.node_ids()
        .max_by(|a, b| net.children(*a).len().cmp(&net.children(*b).len()).then(b.cmp(a)))
        .expect("networks have at least one node")
}

#[derive(Debug)]
pub struct NetworkEntry {
    pub id: String,
    pub document: NetworkDocument,
    pub network: Arc<Network>,
    pub prototype: Prototype,
}

impl NetworkEntry {
    pub fn new(id: String, document: NetworkDocument) -> Result<Self, ApiError> {
        let network: Network = document.clone().into_network()?;
        let prototype = Prototype::new(&network, default_diagnosis(&network))?;
        Ok(Self {
            id,
            document,
            network: Arc::new(network),
            prototype,
        })
    }

    /// Prototype for `diagnosis`, built on demand when it is not the default.
    pub fn prototype_for(&self, diagnosis: Option<&str>) -> Result<Prototype, ApiError> {
        match diagnosis {
            None => Ok(self.prototype.clone()),
            Some(name) => {
                let node = self.network.require_node(name)?;
                if node == self.prototype.diagnosis {
                    Ok(self.prototype.clone())
                } else {
                    Prototype::new(&self.network, node)
                }
            }
        }
    }

    pub fn summary(&self) -> NetworkSummary {
        let net = &self.network;
        let d = self.prototype.diagnosis;
        NetworkSummary {
            id: self.id.clone(),
            diagnosis: net.node(d).id.clone(),
            diagnoses: net.node(d).values.clone(),
            features: net
                .nodes()
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != d.0)
                .map(|(_, n)| FeatureSummary {
                    id: n.id.clone(),
                    label: n.label.clone(),
                    values: n.values.clone(),
                })
                .collect(),
            portions: self.prototype.portions.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureSummary {
    pub id: String,
    pub label: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkSummary {
    pub id: String,
    pub diagnosis: String,
    pub diagnoses: Vec<String>,
    pub features: Vec<FeatureSummary>,
    pub portions: Vec<Portion>,
}

/// Loads every `*.json` network document in `dir`, keyed by file stem.
pub fn load_dir(dir: &Path) -> std::io::Result<BTreeMap<String, NetworkEntry>> {
    let mut out = BTreeMap::new();
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    for path in paths {
        let id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let text = std::fs::read_to_string(&path)?;
        let invalid = |msg: String| std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{}: {msg}", path.display()));
        let document: NetworkDocument = serde_json::from_str(&text).map_err(|e| invalid(e.to_string()))?;
        let entry = NetworkEntry::new(id.clone(), document).map_err(|e| invalid(e.body.message))?;
        out.insert(id, entry);
    }
    Ok(out)
}
