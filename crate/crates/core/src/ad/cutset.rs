//! Loop cutsets and conditioning a network on one cutset instance.

use crate::ctp::{FactorSet, UndirectedGraph};
use crate::error::{InferenceError, Result};
use crate::network::{BeliefNetwork, ConditionalTable, NodeId};
use crate::potential::PotentialTable;
use crate::scalar::Probability;

/// Nodes decomposed by conditioning. Instances enumerate joint member
/// assignments row-major in member order (last member fastest).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopCutset {
    members: Vec<NodeId>,
    cards: Vec<usize>,
    instance_count: usize,
}

impl LoopCutset {
    pub fn new<T: Probability>(net: &BeliefNetwork<T>, members: Vec<NodeId>) -> Result<Self> {
        if members.is_empty() {
            return Err(InferenceError::InvalidCutset("cutset is empty".into()));
        }
        for (i, m) in members.iter().enumerate() {
            if m.0 >= net.node_count() {
                return Err(InferenceError::UnknownNode(m.to_string()));
            }
            if members[..i].contains(m) {
                return Err(InferenceError::InvalidCutset(format!(
                    "`{}` listed twice",
                    net.node(*m).id
                )));
            }
        }
        let cards: Vec<usize> = members.iter().map(|m| net.cardinality(*m)).collect();
        let instance_count = cards
            .iter()
            .try_fold(1usize, |acc, &c| acc.checked_mul(c))
            .ok_or_else(|| InferenceError::InvalidCutset("too many cutset instances".into()))?;
        Ok(Self {
            members,
            cards,
            instance_count,
        })
    }

    pub fn members(&self) -> &[NodeId] {
        &self.members
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn instance_count(&self) -> usize {
        self.instance_count
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.members.contains(&node)
    }

    /// Member values of instance `index`.
    pub fn assignment(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.members.len()];
        for k in (0..self.members.len()).rev() {
            out[k] = index % self.cards[k];
            index /= self.cards[k];
        }
        out
    }

    pub fn instance_index(&self, assignment: &[usize]) -> usize {
        assignment
            .iter()
            .zip(&self.cards)
            .fold(0, |acc, (&v, &c)| acc * c + v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CutsetStrategy {
    /// Use the named nodes, in order.
    Explicit(Vec<String>),
    /// The single node whose removal leaves the most components; ties go to
    /// the smaller cardinality, then to the earlier declared node.
    Auto,
}

pub fn select_cutset<T: Probability>(net: &BeliefNetwork<T>, strategy: &CutsetStrategy) -> Result<LoopCutset> {
    match strategy {
        CutsetStrategy::Explicit(names) => {
            let members = names.iter().map(|n| net.require_node(n)).collect::<Result<Vec<_>>>()?;
            LoopCutset::new(net, members)
        }
        CutsetStrategy::Auto => {
            if net.node_count() < 2 {
                return Err(InferenceError::InvalidCutset(
                    "automatic selection needs at least two nodes".into(),
                ));
            }
            let best = net
                .node_ids()
                .map(|n| (conditioned_component_count(net, &[n]), net.cardinality(n), n))
                .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)).then(b.2.cmp(&a.2)))
                .expect("network has nodes");
            LoopCutset::new(net, vec![best.2])
        }
    }
}

/// Number of connected components left after conditioning on `members`.
pub fn conditioned_component_count<T: Probability>(net: &BeliefNetwork<T>, members: &[NodeId]) -> usize {
    let mut active = vec![true; net.node_count()];
    for m in members {
        active[m.0] = false;
    }
    let scopes: Vec<Vec<NodeId>> = net
        .node_ids()
        .map(|n| {
            net.cpt(n)
                .scope()
                .into_iter()
                .filter(|s| active[s.0])
                .collect()
        })
        .collect();
    UndirectedGraph::from_scopes(net.cardinalities(), active, scopes.iter().map(Vec::as_slice))
        .components()
        .len()
}

/// A network with the cutset instantiated and removed.
///
/// Every remaining node keeps a proper conditional table, sliced at the
/// cutset values. A cutset member's own table becomes a factor over its
/// remaining parents (a constant when it has none), so the product of all
/// factors is the joint `P(rest, cutset = assignment)`.
#[derive(Debug, Clone)]
pub struct ConditionedNetwork<T> {
    assignment: Vec<usize>,
    removed: Vec<bool>,
    node_cards: Vec<usize>,
    tables: Vec<Option<ConditionalTable<T>>>,
    cutset_factors: Vec<PotentialTable<T>>,
    scalar: T,
}

impl<T: Probability> ConditionedNetwork<T> {
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn contains(&self, node: NodeId) -> bool {
        !self.removed[node.0]
    }

    pub fn table(&self, node: NodeId) -> Option<&ConditionalTable<T>> {
        self.tables[node.0].as_ref()
    }

    /// Factors contributed by non-root cutset members.
    pub fn cutset_factors(&self) -> &[PotentialTable<T>] {
        &self.cutset_factors
    }

    /// Product of the cutset members' table entries that became constants.
    pub fn scalar(&self) -> T {
        self.scalar
    }

    pub fn factor_set(&self) -> FactorSet<T> {
        let mut factors: Vec<PotentialTable<T>> = self
            .tables
            .iter()
            .flatten()
            .map(|t| {
                let scope = t.scope();
                let cards = scope.iter().map(|s| self.node_cards[s.0]).collect();
                PotentialTable::new(scope, cards, t.entries().to_vec()).expect("sliced tables are well formed")
            })
            .collect();
        factors.extend(self.cutset_factors.iter().cloned());
        let active = self.removed.iter().map(|r| !r).collect();
        FactorSet::new(self.node_cards.clone(), active, factors, self.scalar)
    }

    pub fn component_count(&self) -> usize {
        self.factor_set().moral_graph().components().len()
    }
}

/// Keeps the entries of a row-major table over `cards` whose digits at the
/// `fixed` positions equal the given values, preserving order.
fn slice_entries<T: Copy>(entries: &[T], cards: &[usize], fixed: &[(usize, usize)]) -> Vec<T> {
    let mut digits = vec![0usize; cards.len()];
    let mut out = Vec::new();
    for &v in entries {
        if fixed.iter().all(|&(pos, val)| digits[pos] == val) {
            out.push(v);
        }
        let mut k = cards.len();
        while k > 0 {
            k -= 1;
            digits[k] += 1;
            if digits[k] < cards[k] {
                break;
            }
            digits[k] = 0;
        }
    }
    out
}

pub fn decompose<T: Probability>(
    net: &BeliefNetwork<T>,
    cutset: &LoopCutset,
    assignment: &[usize],
) -> Result<ConditionedNetwork<T>> {
    if assignment.len() != cutset.members().len() {
        return Err(InferenceError::IncompleteAssignment {
            expected: cutset.members().len(),
            found: assignment.len(),
        });
    }
    let mut value_of = vec![None; net.node_count()];
    for (m, &v) in cutset.members().iter().zip(assignment) {
        if v >= net.cardinality(*m) {
            return Err(InferenceError::UnknownValue {
                node: net.node(*m).id.clone(),
                value: v.to_string(),
            });
        }
        value_of[m.0] = Some(v);
    }
    let node_cards = net.cardinalities();
    let removed: Vec<bool> = value_of.iter().map(Option::is_some).collect();

    let mut tables = Vec::with_capacity(net.node_count());
    let mut cutset_factors = Vec::new();
    let mut scalar = T::one();
    for node in net.node_ids() {
        let cpt = net.cpt(node);
        let scope = cpt.scope();
        let cards: Vec<usize> = scope.iter().map(|s| node_cards[s.0]).collect();
        let fixed: Vec<(usize, usize)> = scope
            .iter()
            .enumerate()
            .filter_map(|(pos, s)| value_of[s.0].map(|v| (pos, v)))
            .collect();
        let kept: Vec<NodeId> = scope.iter().copied().filter(|s| value_of[s.0].is_none()).collect();
        let entries = if fixed.is_empty() {
            cpt.entries().to_vec()
        } else {
            slice_entries(cpt.entries(), &cards, &fixed)
        };

        if removed[node.0] {
            tables.push(None);
            if kept.is_empty() {
                scalar = scalar * entries[0];
            } else {
                let kept_cards = kept.iter().map(|s| node_cards[s.0]).collect();
                cutset_factors.push(PotentialTable::new(kept, kept_cards, entries)?);
            }
        } else {
            let parents = kept[..kept.len() - 1].to_vec();
            tables.push(Some(ConditionalTable::from_parts(
                node,
                parents,
                node_cards[node.0],
                entries,
            )));
        }
    }

    Ok(ConditionedNetwork {
        assignment: assignment.to_vec(),
        removed,
        node_cards,
        tables,
        cutset_factors,
        scalar,
    })
}
