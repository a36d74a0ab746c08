//! Moral graphs and min-fill triangulation.

use std::collections::BTreeSet;

use crate::network::{BeliefNetwork, NodeId};
use crate::scalar::Probability;

/// Undirected graph over a subset of a network's nodes.
///
/// Vertices keep their [`NodeId`]s; `active` marks which nodes take part
/// (nodes removed by conditioning are inactive).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    cards: Vec<usize>,
    active: Vec<bool>,
    adj: Vec<BTreeSet<usize>>,
}

pub type MoralGraph = UndirectedGraph;
pub type ChordalGraph = UndirectedGraph;

impl UndirectedGraph {
    pub fn empty(cards: Vec<usize>, active: Vec<bool>) -> Self {
        let n = cards.len();
        assert_eq!(active.len(), n);
        Self {
            cards,
            active,
            adj: vec![BTreeSet::new(); n],
        }
    }

    /// Connects every pair of nodes that share a scope.
    pub fn from_scopes<'a, I>(cards: Vec<usize>, active: Vec<bool>, scopes: I) -> Self
    where
        I: IntoIterator<Item = &'a [NodeId]>,
    {
        let mut g = Self::empty(cards, active);
        for scope in scopes {
            for (i, a) in scope.iter().enumerate() {
                for b in &scope[i + 1..] {
                    g.add_edge(*a, *b);
                }
            }
        }
        g
    }

    pub fn node_cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn cardinality(&self, v: NodeId) -> usize {
        self.cards[v.0]
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.active.get(v.0).copied().unwrap_or(false)
    }

    pub fn active_mask(&self) -> &[bool] {
        &self.active
    }

    pub fn vertices(&self) -> Vec<NodeId> {
        (0..self.cards.len()).filter(|&i| self.active[i]).map(NodeId).collect()
    }

    pub fn neighbors(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adj[v.0].iter().map(|&u| NodeId(u))
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v.0].len()
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.adj[a.0].contains(&b.0)
    }

    pub fn add_edge(&mut self, a: NodeId, b: NodeId) -> bool {
        assert!(self.contains(a) && self.contains(b), "edge endpoint is not an active vertex");
        if a == b {
            return false;
        }
        let fresh = self.adj[a.0].insert(b.0);
        self.adj[b.0].insert(a.0);
        fresh
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    /// Edges as `(smaller, larger)` pairs in ascending order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (a, nbrs) in self.adj.iter().enumerate() {
            for &b in nbrs.range(a + 1..) {
                out.push((NodeId(a), NodeId(b)));
            }
        }
        out
    }

    /// Connected components, each sorted, ordered by their smallest vertex.
    pub fn components(&self) -> Vec<Vec<NodeId>> {
        let mut seen = vec![false; self.cards.len()];
        let mut out = Vec::new();
        for start in self.vertices() {
            if seen[start.0] {
                continue;
            }
            seen[start.0] = true;
            let mut stack = vec![start.0];
            let mut comp = Vec::new();
            while let Some(v) = stack.pop() {
                comp.push(NodeId(v));
                for &u in &self.adj[v] {
                    if !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// True when each vertex's later neighbors in `order` are pairwise
    /// adjacent, i.e. `order` is a perfect elimination ordering.
    pub fn is_perfect_elimination_order(&self, order: &[NodeId]) -> bool {
        let mut pos = vec![usize::MAX; self.cards.len()];
        for (i, v) in order.iter().enumerate() {
            pos[v.0] = i;
        }
        if self.vertices().iter().any(|v| pos[v.0] == usize::MAX) {
            return false;
        }
        order.iter().all(|v| {
            let later: Vec<usize> = self.adj[v.0].iter().copied().filter(|&u| pos[u] > pos[v.0]).collect();
            later
                .iter()
                .enumerate()
                .all(|(i, &a)| later[i + 1..].iter().all(|&b| self.adj[a].contains(&b)))
        })
    }
}

/// Moral graph of a network: skeleton plus marriages between co-parents.
pub fn moralize<T: Probability>(net: &BeliefNetwork<T>) -> MoralGraph {
    let families: Vec<Vec<NodeId>> = net.node_ids().map(|n| net.cpt(n).scope()).collect();
    UndirectedGraph::from_scopes(
        net.cardinalities(),
        vec![true; net.node_count()],
        families.iter().map(Vec::as_slice),
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triangulation {
    pub graph: ChordalGraph,
    pub order: Vec<NodeId>,
    pub fill_in: Vec<(NodeId, NodeId)>,
}

/// Greedy min-fill elimination.
///
/// Ties on fill count go to the vertex whose elimination clique has the
/// smaller state space, then to the earlier declared vertex.
pub fn triangulate(g: &MoralGraph) -> Triangulation {
    let mut work = g.adj.clone();
    let mut chordal = g.clone();
    let mut remaining: BTreeSet<usize> = g.vertices().iter().map(|v| v.0).collect();
    let mut order = Vec::with_capacity(remaining.len());
    let mut fill_in = Vec::new();

    while !remaining.is_empty() {
        let mut best: Option<(usize, u128, usize)> = None;
        for &v in &remaining {
            let nbrs: Vec<usize> = work[v].iter().copied().collect();
            let mut fill = 0usize;
            for (i, &a) in nbrs.iter().enumerate() {
                for &b in &nbrs[i + 1..] {
                    if !work[a].contains(&b) {
                        fill += 1;
                    }
                }
            }
            let weight = nbrs
                .iter()
                .fold(g.cards[v] as u128, |acc, &u| acc.saturating_mul(g.cards[u] as u128));
            let key = (fill, weight, v);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
        let (_, _, v) = best.expect("remaining is nonempty");
        let nbrs: Vec<usize> = work[v].iter().copied().collect();
        for (i, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[i + 1..] {
                if work[a].insert(b) {
                    work[b].insert(a);
                    chordal.add_edge(NodeId(a), NodeId(b));
                    fill_in.push((NodeId(a.min(b)), NodeId(a.max(b))));
                }
            }
        }
        for &u in &nbrs {
            work[u].remove(&v);
        }
        work[v].clear();
        remaining.remove(&v);
        order.push(NodeId(v));
    }

    Triangulation {
        graph: chordal,
        order,
        fill_in,
    }
}
