//! Discrete belief networks, evidence and the brute-force oracle.
//!
//! A [`BeliefNetwork`] is immutable once built. Nodes are addressed by
//! [`NodeId`], the position of the node in declaration order, so node order
//! from a document is preserved.

mod document;
mod oracle;
pub mod random;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use crate::error::{InferenceError, Result};
use crate::scalar::Probability;

pub use document::{load_evidence, load_network, EvidenceDocument, NetworkDocument, NodeDocument};
pub use oracle::{enumerate_all_posteriors, enumerate_posterior, evidence_likelihood_oracle, joint_probability};

/// Tolerance on row sums accepted when a table is loaded.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeDef {
    pub id: String,
    pub label: String,
    pub values: Vec<String>,
}

impl NodeDef {
    pub fn cardinality(&self) -> usize {
        self.values.len()
    }

    pub fn value_index(&self, label: &str) -> Option<usize> {
        self.values.iter().position(|v| v == label)
    }
}

/// Conditional probability table of one node.
///
/// Rows enumerate parent assignments lexicographically in `parent_order`
/// (the first parent varies slowest); each row lists the node's values in
/// declaration order. Equivalently, the entries are a row-major table over
/// the scope `[parents..., node]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTable<T> {
    node: NodeId,
    parent_order: Vec<NodeId>,
    row_len: usize,
    rows: Vec<T>,
}

impl<T: Probability> ConditionalTable<T> {
    pub(crate) fn from_parts(node: NodeId, parent_order: Vec<NodeId>, row_len: usize, rows: Vec<T>) -> Self {
        debug_assert_eq!(rows.len() % row_len, 0);
        Self {
            node,
            parent_order,
            row_len,
            rows,
        }
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn parent_order(&self) -> &[NodeId] {
        &self.parent_order
    }

    /// Scope of the table viewed as a potential: parents, then the node.
    pub fn scope(&self) -> Vec<NodeId> {
        let mut scope = self.parent_order.clone();
        scope.push(self.node);
        scope
    }

    pub fn entries(&self) -> &[T] {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.len() / self.row_len
    }

    pub fn row(&self, index: usize) -> &[T] {
        &self.rows[index * self.row_len..(index + 1) * self.row_len]
    }

    /// Row index of a parent assignment given in `parent_order`.
    pub fn row_index(&self, parent_values: &[usize], parent_cards: &[usize]) -> usize {
        parent_values
            .iter()
            .zip(parent_cards)
            .fold(0, |acc, (&v, &c)| acc * c + v)
    }
}

/// Observed node values.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Evidence {
    observations: BTreeMap<NodeId, usize>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, node: NodeId, value: usize) -> Self {
        self.observations.insert(node, value);
        self
    }

    /// Records an observation; returns the previous value, if any.
    pub fn observe(&mut self, node: NodeId, value: usize) -> Option<usize> {
        self.observations.insert(node, value)
    }

    pub fn remove(&mut self, node: NodeId) -> Option<usize> {
        self.observations.remove(&node)
    }

    pub fn get(&self, node: NodeId) -> Option<usize> {
        self.observations.get(&node).copied()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.observations.contains_key(&node)
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, usize)> + '_ {
        self.observations.iter().map(|(&n, &v)| (n, v))
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.observations.keys().copied()
    }

    /// Union of two evidence sets; fails if they disagree on a node.
    pub fn merged<T: Probability>(&self, other: &Evidence, net: &BeliefNetwork<T>) -> Result<Evidence> {
        let mut out = self.clone();
        for (node, value) in other.iter() {
            match out.observe(node, value) {
                Some(prev) if prev != value => {
                    return Err(InferenceError::Conflict {
                        node: net.node(node).id.clone(),
                    })
                }
                _ => {}
            }
        }
        Ok(out)
    }
}

impl FromIterator<(NodeId, usize)> for Evidence {
    fn from_iter<I: IntoIterator<Item = (NodeId, usize)>>(iter: I) -> Self {
        Self {
            observations: iter.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BeliefNetwork<T> {
    nodes: Vec<NodeDef>,
    cpts: Vec<ConditionalTable<T>>,
    children: Vec<Vec<NodeId>>,
    topo: Vec<NodeId>,
    index: HashMap<String, NodeId>,
}

impl<T: Probability> BeliefNetwork<T> {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn nodes(&self) -> &[NodeDef] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &NodeDef {
        &self.nodes[id.0]
    }

    pub fn node_id(&self, id: &str) -> Option<NodeId> {
        self.index.get(id).copied()
    }

    pub fn require_node(&self, id: &str) -> Result<NodeId> {
        self.node_id(id).ok_or_else(|| InferenceError::UnknownNode(id.to_string()))
    }

    pub fn cardinality(&self, id: NodeId) -> usize {
        self.nodes[id.0].cardinality()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.nodes.iter().map(NodeDef::cardinality).collect()
    }

    pub fn parents(&self, id: NodeId) -> &[NodeId] {
        self.cpts[id.0].parent_order()
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.children[id.0]
    }

    pub fn cpt(&self, id: NodeId) -> &ConditionalTable<T> {
        &self.cpts[id.0]
    }

    pub fn is_root(&self, id: NodeId) -> bool {
        self.parents(id).is_empty()
    }

    pub fn topological_order(&self) -> &[NodeId] {
        &self.topo
    }

    /// Parent to child edges, grouped by child in declaration order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.node_ids()
            .flat_map(move |child| self.parents(child).iter().map(move |&p| (p, child)))
    }

    /// Probability of `value` for `node` given a full assignment of its parents.
    pub fn conditional(&self, node: NodeId, value: usize, assignment: &[usize]) -> T {
        let cpt = &self.cpts[node.0];
        let row = cpt
            .parent_order
            .iter()
            .fold(0, |acc, p| acc * self.cardinality(*p) + assignment[p.0]);
        cpt.rows[row * cpt.row_len + value]
    }

    /// Builds evidence from `(node id, value label)` pairs.
    pub fn evidence_from_labels<'a, I>(&self, pairs: I) -> Result<Evidence>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut evidence = Evidence::new();
        for (node, value) in pairs {
            let id = self.require_node(node)?;
            let index = self.node(id).value_index(value).ok_or_else(|| InferenceError::UnknownValue {
                node: node.to_string(),
                value: value.to_string(),
            })?;
            if let Some(prev) = evidence.observe(id, index) {
                if prev != index {
                    return Err(InferenceError::Conflict { node: node.to_string() });
                }
            }
        }
        Ok(evidence)
    }

    /// Checks that every observation names an existing node and value.
    pub fn validate_evidence(&self, evidence: &Evidence) -> Result<()> {
        for (node, value) in evidence.iter() {
            if node.0 >= self.nodes.len() {
                return Err(InferenceError::UnknownNode(node.to_string()));
            }
            if value >= self.cardinality(node) {
                return Err(InferenceError::UnknownValue {
                    node: self.node(node).id.clone(),
                    value: value.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Converts all tables to another precision.
    pub fn cast<U: Probability>(&self) -> BeliefNetwork<U> {
        BeliefNetwork {
            nodes: self.nodes.clone(),
            cpts: self
                .cpts
                .iter()
                .map(|c| ConditionalTable {
                    node: c.node,
                    parent_order: c.parent_order.clone(),
                    row_len: c.row_len,
                    rows: c.rows.iter().map(|v| U::of(v.as_f64())).collect(),
                })
                .collect(),
            children: self.children.clone(),
            topo: self.topo.clone(),
            index: self.index.clone(),
        }
    }
}

/// Incremental construction of a network with parents referenced by id.
///
/// Parents may be declared after their children; everything is resolved and
/// validated in [`NetworkBuilder::build`].
#[derive(Debug, Clone, Default)]
pub struct NetworkBuilder {
    nodes: Vec<PendingNode>,
}

#[derive(Debug, Clone)]
struct PendingNode {
    def: NodeDef,
    parents: Vec<String>,
    cpt: Vec<f64>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node(mut self, id: &str, values: &[&str], parents: &[&str], cpt: &[f64]) -> Self {
        self.push(
            NodeDef {
                id: id.to_string(),
                label: id.to_string(),
                values: values.iter().map(|v| v.to_string()).collect(),
            },
            parents.iter().map(|p| p.to_string()).collect(),
            cpt.to_vec(),
        );
        self
    }

    pub fn push(&mut self, def: NodeDef, parents: Vec<String>, cpt: Vec<f64>) {
        self.nodes.push(PendingNode { def, parents, cpt });
    }

    pub fn build<T: Probability>(self) -> Result<BeliefNetwork<T>> {
        let mut index = HashMap::with_capacity(self.nodes.len());
        for (i, n) in self.nodes.iter().enumerate() {
            if n.def.id.is_empty() {
                return Err(InferenceError::InvalidNetwork(format!("node {i} has an empty id")));
            }
            if index.insert(n.def.id.clone(), NodeId(i)).is_some() {
                return Err(InferenceError::InvalidNetwork(format!("duplicate node id `{}`", n.def.id)));
            }
            if n.def.values.len() < 2 {
                return Err(InferenceError::InvalidNetwork(format!(
                    "node `{}` needs at least two values",
                    n.def.id
                )));
            }
            let mut seen = HashSet::new();
            for v in &n.def.values {
                if !seen.insert(v.as_str()) {
                    return Err(InferenceError::InvalidNetwork(format!(
                        "node `{}` repeats value `{v}`",
                        n.def.id
                    )));
                }
            }
        }

        let mut parent_ids = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            let mut ids = Vec::with_capacity(n.parents.len());
            for p in &n.parents {
                let id = *index.get(p).ok_or_else(|| {
                    InferenceError::InvalidNetwork(format!("node `{}` names unknown parent `{p}`", n.def.id))
                })?;
                if ids.contains(&id) {
                    return Err(InferenceError::InvalidNetwork(format!(
                        "node `{}` lists parent `{p}` twice",
                        n.def.id
                    )));
                }
                ids.push(id);
            }
            parent_ids.push(ids);
        }

        let topo = topological_order(&self.nodes, &parent_ids)?;

        let mut children = vec![Vec::new(); self.nodes.len()];
        for (child, parents) in parent_ids.iter().enumerate() {
            for p in parents {
                children[p.0].push(NodeId(child));
            }
        }

        let mut cpts = Vec::with_capacity(self.nodes.len());
        for (i, n) in self.nodes.iter().enumerate() {
            let card = n.def.values.len();
            let rows: usize = parent_ids[i].iter().map(|p| self.nodes[p.0].def.values.len()).product();
            let expected = rows * card;
            if n.cpt.len() != expected {
                return Err(InferenceError::Dimension {
                    node: n.def.id.clone(),
                    expected,
                    found: n.cpt.len(),
                });
            }
            let mut entries = Vec::with_capacity(expected);
            for (r, row) in n.cpt.chunks(card).enumerate() {
                if let Some(bad) = row.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
                    return Err(InferenceError::InvalidNetwork(format!(
                        "table for `{}` has entry {bad} outside [0, 1] in row {r}",
                        n.def.id
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(InferenceError::RowSum {
                        node: n.def.id.clone(),
                        row: r,
                        sum,
                    });
                }
                entries.extend(row.iter().map(|v| T::of(v / sum)));
            }
            cpts.push(ConditionalTable::from_parts(NodeId(i), parent_ids[i].clone(), card, entries));
        }

        Ok(BeliefNetwork {
            nodes: self.nodes.into_iter().map(|n| n.def).collect(),
            cpts,
            children,
            topo,
            index,
        })
    }
}

fn topological_order(nodes: &[PendingNode], parents: &[Vec<NodeId>]) -> Result<Vec<NodeId>> {
    let n = nodes.len();
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut children = vec![Vec::new(); n];
    for (c, ps) in parents.iter().enumerate() {
        for p in ps {
            children[p.0].push(c);
        }
    }
    // Kahn's algorithm, smallest index first for a stable order.
    let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(&next) = ready.iter().next() {
        ready.remove(&next);
        order.push(NodeId(next));
        for &c in &children[next] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() < n {
        let stuck = (0..n).find(|&i| indegree[i] > 0).unwrap_or(0);
        return Err(InferenceError::Cycle {
            node: nodes[stuck].def.id.clone(),
        });
    }
    Ok(order)
}
