//! Clique forest construction: maximal cliques of a chordal graph joined by a
//! maximum-weight spanning forest over separator size.
//!
//! The structure is independent of the scalar type and of table values, so a
//! single structure is shared by every conditioned instance of a network.

use std::fmt::{self, Write as _};

use super::graph::Triangulation;
use crate::error::{InferenceError, Result};
use crate::network::NodeId;
use crate::potential::index_map;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ComponentId(pub usize);

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueDef {
    pub members: Vec<NodeId>,
    pub cards: Vec<usize>,
    pub state_space_size: usize,
    pub component: ComponentId,
}

impl CliqueDef {
    pub fn contains(&self, node: NodeId) -> bool {
        self.members.binary_search(&node).is_ok()
    }

    pub fn position(&self, node: NodeId) -> Option<usize> {
        self.members.binary_search(&node).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeEdge {
    pub cliques: (usize, usize),
    pub separator: Vec<NodeId>,
    pub separator_size: usize,
    /// Clique entry -> separator entry, for each endpoint.
    pub(crate) maps: (Vec<usize>, Vec<usize>),
}

impl TreeEdge {
    pub(crate) fn map_for(&self, clique: usize) -> &[usize] {
        if clique == self.cliques.0 {
            &self.maps.0
        } else {
            &self.maps.1
        }
    }
}

/// One message-passing step; the collect phase walks the schedule backwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleStep {
    pub edge: usize,
    pub parent: usize,
    pub child: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub id: ComponentId,
    pub cliques: Vec<usize>,
    pub top_clique: usize,
    pub nodes: Vec<NodeId>,
    /// Tree edges in breadth-first order from the top clique.
    pub schedule: Vec<ScheduleStep>,
    pub state_space_size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForestStructure {
    node_cards: Vec<usize>,
    cliques: Vec<CliqueDef>,
    edges: Vec<TreeEdge>,
    components: Vec<Component>,
    node_home: Vec<Option<usize>>,
    node_readout: Vec<Option<usize>>,
    factor_home: Vec<Option<usize>>,
    pub(crate) layout: Layout,
}

/// Where each table lives in a flat buffer of potentials. Every component's
/// cliques and separators occupy one contiguous span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Layout {
    pub(crate) clique_offset: Vec<usize>,
    pub(crate) separator_offset: Vec<usize>,
    pub(crate) component_span: Vec<std::ops::Range<usize>>,
    pub(crate) len: usize,
}

impl Layout {
    fn new(cliques: &[CliqueDef], edges: &[TreeEdge], components: &[Component]) -> Self {
        let mut clique_offset = vec![0; cliques.len()];
        let mut separator_offset = vec![0; edges.len()];
        let mut component_span = Vec::with_capacity(components.len());
        let mut at = 0;
        for comp in components {
            let start = at;
            for &c in &comp.cliques {
                clique_offset[c] = at;
                at += cliques[c].state_space_size;
            }
            for step in &comp.schedule {
                separator_offset[step.edge] = at;
                at += edges[step.edge].separator_size;
            }
            component_span.push(start..at);
        }
        Layout {
            clique_offset,
            separator_offset,
            component_span,
            len: at,
        }
    }
}

impl ForestStructure {
    pub fn node_cards(&self) -> &[usize] {
        &self.node_cards
    }

    pub fn cliques(&self) -> &[CliqueDef] {
        &self.cliques
    }

    pub fn tree_edges(&self) -> &[TreeEdge] {
        &self.edges
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn component(&self, id: ComponentId) -> &Component {
        &self.components[id.0]
    }

    /// First clique in creation order that contains `node`; evidence is
    /// entered there.
    pub fn home_clique(&self, node: NodeId) -> Option<usize> {
        self.node_home.get(node.0).copied().flatten()
    }

    /// Smallest clique containing `node`, used for posterior readout.
    pub fn readout_clique(&self, node: NodeId) -> Option<usize> {
        self.node_readout.get(node.0).copied().flatten()
    }

    pub fn component_of(&self, node: NodeId) -> Option<ComponentId> {
        self.home_clique(node).map(|c| self.cliques[c].component)
    }

    pub fn factor_home(&self, factor: usize) -> Option<usize> {
        self.factor_home.get(factor).copied().flatten()
    }

    pub fn cliques_containing(&self, node: NodeId) -> Vec<usize> {
        (0..self.cliques.len()).filter(|&c| self.cliques[c].contains(node)).collect()
    }

    /// Component with the largest total clique state space, ties to the
    /// lower id.
    pub fn largest_component(&self) -> Option<ComponentId> {
        self.components
            .iter()
            .max_by(|a, b| a.state_space_size.cmp(&b.state_space_size).then(b.id.cmp(&a.id)))
            .map(|c| c.id)
    }

    /// Sorted, deduplicated components containing any of `nodes`.
    pub fn components_touching(&self, nodes: impl IntoIterator<Item = NodeId>) -> Vec<ComponentId> {
        let mut out: Vec<ComponentId> = nodes.into_iter().filter_map(|n| self.component_of(n)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Text report: one line per clique and per edge, grouped by component.
    pub fn dump(&self, names: &[&str]) -> String {
        let name = |n: &NodeId| names.get(n.0).map_or_else(|| n.to_string(), |s| s.to_string());
        let mut out = String::new();
        for comp in &self.components {
            let _ = writeln!(
                out,
                "component {} top={} cliques={} state_space={}",
                comp.id,
                comp.top_clique,
                comp.cliques.len(),
                comp.state_space_size
            );
            for &c in &comp.cliques {
                let clique = &self.cliques[c];
                let members: Vec<String> = clique.members.iter().map(name).collect();
                let _ = writeln!(
                    out,
                    "  clique {c} {{{}}} size={}",
                    members.join(","),
                    clique.state_space_size
                );
            }
            for step in &comp.schedule {
                let edge = &self.edges[step.edge];
                let sep: Vec<String> = edge.separator.iter().map(name).collect();
                let _ = writeln!(
                    out,
                    "  edge {}-{} sep {{{}}} size={}",
                    edge.cliques.0,
                    edge.cliques.1,
                    sep.join(","),
                    edge.separator_size
                );
            }
        }
        out
    }
}

/// Builds the clique forest of a triangulated graph.
///
/// `factor_scopes` lists the scope of every factor that will be multiplied
/// into the forest; each must fit inside some clique.
pub fn build_forest(tri: &Triangulation, factor_scopes: &[Vec<NodeId>]) -> Result<ForestStructure> {
    let graph = &tri.graph;
    let node_cards = graph.node_cards().to_vec();
    let mut pos = vec![usize::MAX; node_cards.len()];
    for (i, v) in tri.order.iter().enumerate() {
        pos[v.0] = i;
    }

    let candidates: Vec<Vec<NodeId>> = tri
        .order
        .iter()
        .map(|&v| {
            let mut c: Vec<NodeId> = graph.neighbors(v).filter(|u| pos[u.0] > pos[v.0]).collect();
            c.push(v);
            c.sort_unstable();
            c
        })
        .collect();
    let is_subset = |a: &[NodeId], b: &[NodeId]| a.iter().all(|x| b.binary_search(x).is_ok());
    let mut members: Vec<Vec<NodeId>> = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        let dominated = candidates
            .iter()
            .enumerate()
            .any(|(j, d)| j != i && d.len() >= c.len() && is_subset(c, d) && (d.len() > c.len() || j < i));
        if !dominated {
            members.push(c.clone());
        }
    }

    let mut cliques: Vec<CliqueDef> = members
        .into_iter()
        .map(|m| {
            let cards: Vec<usize> = m.iter().map(|n| node_cards[n.0]).collect();
            CliqueDef {
                state_space_size: cards.iter().product(),
                members: m,
                cards,
                component: ComponentId(usize::MAX),
            }
        })
        .collect();

    // Maximum-weight spanning forest over separator cardinality.
    let mut candidates_edges: Vec<(usize, usize, usize, Vec<NodeId>, usize)> = Vec::new();
    for i in 0..cliques.len() {
        for j in i + 1..cliques.len() {
            let sep: Vec<NodeId> = cliques[i]
                .members
                .iter()
                .copied()
                .filter(|n| cliques[j].contains(*n))
                .collect();
            if !sep.is_empty() {
                let size = sep.iter().map(|n| node_cards[n.0]).product();
                candidates_edges.push((i, j, sep.len(), sep, size));
            }
        }
    }
    candidates_edges.sort_by(|a, b| b.2.cmp(&a.2).then(b.4.cmp(&a.4)).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));

    let mut uf = UnionFind::new(cliques.len());
    let mut edges = Vec::new();
    for (i, j, _, sep, size) in candidates_edges {
        if uf.union(i, j) {
            let sep_cards: Vec<usize> = sep.iter().map(|n| node_cards[n.0]).collect();
            let map_i = index_map(&cliques[i].members, &cliques[i].cards, &sep, &sep_cards);
            let map_j = index_map(&cliques[j].members, &cliques[j].cards, &sep, &sep_cards);
            edges.push(TreeEdge {
                cliques: (i, j),
                separator: sep,
                separator_size: size,
                maps: (map_i, map_j),
            });
        }
    }

    // Components, numbered by their earliest clique.
    let mut root_to_component = vec![usize::MAX; cliques.len()];
    let mut components: Vec<Component> = Vec::new();
    for c in 0..cliques.len() {
        let root = uf.find(c);
        if root_to_component[root] == usize::MAX {
            root_to_component[root] = components.len();
            components.push(Component {
                id: ComponentId(components.len()),
                cliques: Vec::new(),
                top_clique: c,
                nodes: Vec::new(),
                schedule: Vec::new(),
                state_space_size: 0,
            });
        }
        let comp = &mut components[root_to_component[root]];
        comp.cliques.push(c);
        cliques[c].component = comp.id;
    }

    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); cliques.len()];
    for (e, edge) in edges.iter().enumerate() {
        incident[edge.cliques.0].push(e);
        incident[edge.cliques.1].push(e);
    }
    for comp in components.iter_mut() {
        comp.top_clique = *comp
            .cliques
            .iter()
            .max_by(|&&a, &&b| {
                cliques[a]
                    .state_space_size
                    .cmp(&cliques[b].state_space_size)
                    .then(b.cmp(&a))
            })
            .expect("components are nonempty");
        comp.state_space_size = comp.cliques.iter().map(|&c| cliques[c].state_space_size).sum();
        let mut nodes: Vec<NodeId> = comp.cliques.iter().flat_map(|&c| cliques[c].members.clone()).collect();
        nodes.sort_unstable();
        nodes.dedup();
        comp.nodes = nodes;

        let mut visited = vec![false; cliques.len()];
        visited[comp.top_clique] = true;
        let mut queue = std::collections::VecDeque::from([comp.top_clique]);
        while let Some(parent) = queue.pop_front() {
            for &e in &incident[parent] {
                let (a, b) = edges[e].cliques;
                let child = if a == parent { b } else { a };
                if !visited[child] {
                    visited[child] = true;
                    comp.schedule.push(ScheduleStep { edge: e, parent, child });
                    queue.push_back(child);
                }
            }
        }
    }

    let mut node_home = vec![None; node_cards.len()];
    let mut node_readout: Vec<Option<usize>> = vec![None; node_cards.len()];
    for (c, clique) in cliques.iter().enumerate() {
        for n in &clique.members {
            if node_home[n.0].is_none() {
                node_home[n.0] = Some(c);
            }
            match node_readout[n.0] {
                Some(best) if cliques[best].state_space_size <= clique.state_space_size => {}
                _ => node_readout[n.0] = Some(c),
            }
        }
    }

    let mut factor_home = Vec::with_capacity(factor_scopes.len());
    for scope in factor_scopes {
        if scope.is_empty() {
            factor_home.push(None);
            continue;
        }
        let home = cliques.iter().position(|c| scope.iter().all(|n| c.contains(*n)));
        match home {
            Some(h) => factor_home.push(Some(h)),
            None => {
                return Err(InferenceError::Internal(format!(
                    "factor over {scope:?} fits in no clique"
                )))
            }
        }
    }

    let layout = Layout::new(&cliques, &edges, &components);
    Ok(ForestStructure {
        node_cards,
        cliques,
        edges,
        components,
        node_home,
        node_readout,
        factor_home,
        layout,
    })
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        // Lower root wins so component numbering stays creation-ordered.
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        self.parent[hi] = lo;
        true
    }
}
