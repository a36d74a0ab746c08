use std::sync::Arc;

use rayon::prelude::*;

use super::graph::{triangulate, UndirectedGraph};
use super::structure::{build_forest, ComponentId, ForestStructure};
use crate::error::{InferenceError, Result};
use crate::network::{BeliefNetwork, Evidence, NodeId};
use crate::potential::{index_map, PotentialTable};
use crate::scalar::Probability;

/// The factors whose product a forest represents, over a subset of a
/// network's nodes.
#[derive(Debug, Clone)]
pub struct FactorSet<T> {
    node_cards: Vec<usize>,
    active: Vec<bool>,
    factors: Vec<PotentialTable<T>>,
    scalar: T,
}

impl<T: Probability> FactorSet<T> {
    pub fn new(node_cards: Vec<usize>, active: Vec<bool>, factors: Vec<PotentialTable<T>>, scalar: T) -> Self {
        Self {
            node_cards,
            active,
            factors,
            scalar,
        }
    }

    /// One factor per conditional table.
    pub fn from_network(net: &BeliefNetwork<T>) -> Self {
        let cards = net.cardinalities();
        let factors = net
            .node_ids()
            .map(|n| {
                let cpt = net.cpt(n);
                let scope = cpt.scope();
                let scope_cards = scope.iter().map(|s| cards[s.0]).collect();
                PotentialTable::new(scope, scope_cards, cpt.entries().to_vec()).expect("tables are well formed")
            })
            .collect();
        Self::new(cards, vec![true; net.node_count()], factors, T::one())
    }

    pub fn node_cards(&self) -> &[usize] {
        &self.node_cards
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn factors(&self) -> &[PotentialTable<T>] {
        &self.factors
    }

    /// Constant factor left over after conditioning (scope-free tables).
    pub fn scalar(&self) -> T {
        self.scalar
    }

    pub fn scopes(&self) -> Vec<Vec<NodeId>> {
        self.factors.iter().map(|f| f.scope().to_vec()).collect()
    }

    pub fn moral_graph(&self) -> UndirectedGraph {
        let scopes = self.scopes();
        UndirectedGraph::from_scopes(
            self.node_cards.clone(),
            self.active.clone(),
            scopes.iter().map(Vec::as_slice),
        )
    }

    /// Moralize, triangulate, and build the clique forest.
    pub fn structure(&self) -> Result<Arc<ForestStructure>> {
        let tri = triangulate(&self.moral_graph());
        Ok(Arc::new(build_forest(&tri, &self.scopes())?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentPass<T> {
    pub component: ComponentId,
    pub messages: usize,
    /// Mass of the top clique after collecting, before renormalization.
    pub constant: T,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PropagationReport<T> {
    pub passes: Vec<ComponentPass<T>>,
}

impl<T: Probability> PropagationReport<T> {
    pub fn touched_components(&self) -> Vec<ComponentId> {
        self.passes.iter().map(|p| p.component).collect()
    }

    pub fn messages_passed(&self) -> usize {
        self.passes.iter().map(|p| p.messages).sum()
    }

    pub fn per_component_constant(&self) -> Vec<(ComponentId, T)> {
        self.passes.iter().map(|p| (p.component, p.constant)).collect()
    }

    pub fn constant(&self, component: ComponentId) -> Option<T> {
        self.passes.iter().find(|p| p.component == component).map(|p| p.constant)
    }

    pub fn is_empty(&self) -> bool {
        self.passes.is_empty()
    }
}

/// Product of the per-component constants: the probability of the evidence
/// entered since the previous propagation. One for an empty report.
pub fn forest_likelihood<T: Probability>(report: &PropagationReport<T>) -> T {
    report.passes.iter().fold(T::one(), |acc, p| acc * p.constant)
}

/// Lanes per interleaved block. Wide enough that the lane loop dominates
/// the per-table bookkeeping, narrow enough to split work across threads.
const LANE_BLOCK: usize = 16;

/// Per-lane bookkeeping; potentials live in the owning [`LaneBlock`].
#[derive(Debug, Clone)]
struct LaneState<T> {
    dirty: Vec<bool>,
    saved_dirty: Vec<bool>,
    /// Observed value per node.
    observed: Vec<Option<usize>>,
    /// Nodes observed since the last checkpoint.
    journal: Vec<NodeId>,
    passes: Vec<ComponentPass<T>>,
}

impl<T> LaneState<T> {
    fn new(components: usize, nodes: usize) -> Self {
        Self {
            dirty: vec![true; components],
            saved_dirty: vec![true; components],
            observed: vec![None; nodes],
            journal: Vec::new(),
            passes: Vec::new(),
        }
    }
}

/// Potentials of up to [`LANE_BLOCK`] lanes, interleaved: entry `i` of lane
/// `k` sits at `i * width + k`, so table loops run across lanes innermost.
#[derive(Debug, Clone)]
struct LaneBlock<T> {
    width: usize,
    data: Vec<T>,
    backup: Vec<T>,
    /// Components copied to `backup` by the last checkpoint.
    saved: Vec<bool>,
    checkpointed: bool,
    scratch: Vec<T>,
    states: Vec<LaneState<T>>,
}

fn clique_range(s: &ForestStructure, clique: usize) -> std::ops::Range<usize> {
    let at = s.layout.clique_offset[clique];
    at..at + s.cliques()[clique].state_space_size
}

fn separator_range(s: &ForestStructure, edge: usize) -> std::ops::Range<usize> {
    let at = s.layout.separator_offset[edge];
    at..at + s.tree_edges()[edge].separator_size
}

fn check_evidence<T>(s: &ForestStructure, state: &LaneState<T>, evidence: &Evidence) -> Result<()> {
    let cards = s.node_cards();
    for (node, value) in evidence.iter() {
        if node.0 >= cards.len() {
            return Err(InferenceError::UnknownNode(node.to_string()));
        }
        if value >= cards[node.0] {
            return Err(InferenceError::UnknownValue {
                node: node.to_string(),
                value: value.to_string(),
            });
        }
        if s.home_clique(node).is_none() {
            return Err(InferenceError::NodeNotInForest(node.to_string()));
        }
        if matches!(state.observed[node.0], Some(prev) if prev != value) {
            return Err(InferenceError::Conflict { node: node.to_string() });
        }
    }
    Ok(())
}

impl<T: Probability> LaneBlock<T> {
    fn new(s: &ForestStructure, lanes: &[Vec<T>]) -> Self {
        let width = lanes.len();
        let mut data = vec![T::zero(); s.layout.len * width];
        for (k, lane) in lanes.iter().enumerate() {
            for (i, v) in lane.iter().enumerate() {
                data[i * width + k] = *v;
            }
        }
        Self {
            width,
            backup: data.clone(),
            data,
            saved: vec![false; s.components().len()],
            checkpointed: false,
            scratch: Vec::new(),
            states: (0..width)
                .map(|_| LaneState::new(s.components().len(), s.node_cards().len()))
                .collect(),
        }
    }

    fn column(&self, range: std::ops::Range<usize>, k: usize) -> Vec<T> {
        range.map(|i| self.data[i * self.width + k]).collect()
    }

    /// Zeroes entries of lane `k` inconsistent with each new observation in
    /// the node's home clique and marks the owning components dirty.
    /// Assumes the evidence passed [`check_evidence`].
    fn enter(&mut self, s: &ForestStructure, k: usize, evidence: &Evidence) {
        let w = self.width;
        let state = &mut self.states[k];
        for (node, value) in evidence.iter() {
            if state.observed[node.0].is_some() {
                continue;
            }
            let home = s.home_clique(node).expect("evidence was checked");
            let def = &s.cliques()[home];
            let pos = def.position(node).expect("home clique contains the node");
            let stride: usize = def.cards[pos + 1..].iter().product();
            let card = def.cards[pos];
            for i in clique_range(s, home) {
                let local = i - s.layout.clique_offset[home];
                if (local / stride) % card != value {
                    self.data[i * w + k] = T::zero();
                }
            }
            state.dirty[def.component.0] = true;
            state.observed[node.0] = Some(value);
            state.journal.push(node);
        }
    }

    /// Saves `components`, plus any component dirty in some lane, for every
    /// lane of the block.
    fn checkpoint(&mut self, s: &ForestStructure, components: &[ComponentId]) {
        let w = self.width;
        self.saved.iter_mut().for_each(|c| *c = false);
        for c in components {
            self.saved[c.0] = true;
        }
        for st in &mut self.states {
            for (c, &d) in st.dirty.iter().enumerate() {
                self.saved[c] |= d;
            }
            st.saved_dirty.copy_from_slice(&st.dirty);
            st.journal.clear();
        }
        for (c, _) in self.saved.iter().enumerate().filter(|(_, s)| **s) {
            let span = &s.layout.component_span[c];
            let span = span.start * w..span.end * w;
            self.backup[span.clone()].copy_from_slice(&self.data[span]);
        }
        self.checkpointed = true;
    }

    fn rollback(&mut self, s: &ForestStructure) {
        if !std::mem::take(&mut self.checkpointed) {
            return;
        }
        let w = self.width;
        for (c, _) in self.saved.iter().enumerate().filter(|(_, s)| **s) {
            let span = &s.layout.component_span[c];
            let span = span.start * w..span.end * w;
            self.data[span.clone()].copy_from_slice(&self.backup[span]);
        }
        for st in &mut self.states {
            st.dirty.copy_from_slice(&st.saved_dirty);
            for node in st.journal.drain(..) {
                st.observed[node.0] = None;
            }
        }
    }

    /// Collect to each dirty component's top clique, record and divide out
    /// its mass, then distribute. A zero-mass component is left zeroed.
    ///
    /// Returns the product of the component constants for each selected
    /// lane; the individual passes are kept in the lane states.
    fn propagate(&mut self, s: &ForestStructure, selected: &[bool]) -> Vec<Option<T>> {
        let w = self.width;
        let mut product: Vec<Option<T>> = selected.iter().map(|&sel| sel.then(T::one)).collect();
        for (st, _) in self.states.iter_mut().zip(selected).filter(|(_, s)| **s) {
            st.passes.clear();
        }
        let mut lanes = Vec::with_capacity(w);
        let mut constants = vec![T::zero(); w];
        for comp in s.components() {
            lanes.clear();
            lanes.extend((0..w).filter(|&k| selected[k] && self.states[k].dirty[comp.id.0]));
            if lanes.is_empty() {
                continue;
            }
            for step in comp.schedule.iter().rev() {
                self.pass_message(s, step.edge, step.child, step.parent, &lanes);
            }
            let top = clique_range(s, comp.top_clique);
            let top = &mut self.data[top.start * w..top.end * w];
            constants.iter_mut().for_each(|c| *c = T::zero());
            for row in top.chunks_exact(w) {
                for &k in &lanes {
                    constants[k] = constants[k] + row[k];
                }
            }
            for &k in &lanes {
                let constant = constants[k];
                if constant > T::zero() && constant != T::one() {
                    let inv = T::one() / constant;
                    top.iter_mut().skip(k).step_by(w).for_each(|v| *v = *v * inv);
                }
            }
            for step in &comp.schedule {
                self.pass_message(s, step.edge, step.parent, step.child, &lanes);
            }
            for &k in &lanes {
                let st = &mut self.states[k];
                st.dirty[comp.id.0] = false;
                st.passes.push(ComponentPass {
                    component: comp.id,
                    messages: 2 * comp.schedule.len(),
                    constant: constants[k],
                });
                product[k] = product[k].map(|p| p * constants[k]);
            }
        }
        product
    }

    fn pass_message(&mut self, s: &ForestStructure, edge: usize, from: usize, to: usize, lanes: &[usize]) {
        let w = self.width;
        let e = &s.tree_edges()[edge];
        let Self { data, scratch, .. } = self;
        scratch.clear();
        scratch.resize(e.separator_size * w, T::zero());
        let from_at = s.layout.clique_offset[from] * w;
        let to_at = s.layout.clique_offset[to] * w;
        let sep = separator_range(s, edge);
        let sep = sep.start * w..sep.end * w;
        if lanes.len() == w {
            // Every lane moves: whole rows, which the compiler vectorizes.
            for (i, &j) in e.map_for(from).iter().enumerate() {
                let src = &data[from_at + i * w..from_at + (i + 1) * w];
                for (acc, v) in scratch[j * w..(j + 1) * w].iter_mut().zip(src) {
                    *acc = *acc + *v;
                }
            }
            for (ratio, old) in scratch.iter_mut().zip(&mut data[sep]) {
                let new = *ratio;
                *ratio = T::safe_div(new, *old);
                *old = new;
            }
            for (i, &j) in e.map_for(to).iter().enumerate() {
                let dst = &mut data[to_at + i * w..to_at + (i + 1) * w];
                for (v, r) in dst.iter_mut().zip(&scratch[j * w..(j + 1) * w]) {
                    *v = *v * *r;
                }
            }
        } else {
            for (i, &j) in e.map_for(from).iter().enumerate() {
                for &k in lanes {
                    scratch[j * w + k] = scratch[j * w + k] + data[from_at + i * w + k];
                }
            }
            let sep = &mut data[sep];
            for j in 0..e.separator_size {
                for &k in lanes {
                    let new = scratch[j * w + k];
                    scratch[j * w + k] = T::safe_div(new, sep[j * w + k]);
                    sep[j * w + k] = new;
                }
            }
            for (i, &j) in e.map_for(to).iter().enumerate() {
                for &k in lanes {
                    let v = &mut data[to_at + i * w + k];
                    *v = *v * scratch[j * w + k];
                }
            }
        }
    }
}

/// Potentials of several copies ("lanes") of one forest structure. Lanes
/// are grouped into interleaved blocks; every lane sees the same arithmetic
/// in the same order whatever its block.
#[derive(Debug, Clone)]
pub(crate) struct ForestLanes<T> {
    structure: Arc<ForestStructure>,
    /// Lanes per block; the last block may hold fewer.
    width: usize,
    blocks: Vec<LaneBlock<T>>,
}

/// Initial potentials of one lane: factors multiplied into their home
/// cliques, separators at one.
fn initial_lane<T: Probability>(structure: &ForestStructure, factors: &FactorSet<T>) -> Result<Vec<T>> {
    let mut data = vec![T::one(); structure.layout.len];
    for (f, factor) in factors.factors().iter().enumerate() {
        if factor.scope().is_empty() {
            continue;
        }
        let home = structure
            .factor_home(f)
            .ok_or_else(|| InferenceError::Internal(format!("factor {f} has no containing clique")))?;
        let clique = &structure.cliques()[home];
        let map = index_map(&clique.members, &clique.cards, factor.scope(), factor.cards());
        let values = factor.entries();
        for (v, &j) in data[clique_range(structure, home)].iter_mut().zip(&map) {
            *v = *v * values[j];
        }
    }
    Ok(data)
}

impl<T: Probability> ForestLanes<T> {
    /// One lane per factor set, all components dirty.
    pub(crate) fn new<'f>(
        structure: Arc<ForestStructure>,
        factor_sets: impl IntoIterator<Item = &'f FactorSet<T>>,
    ) -> Result<Self> {
        let lanes = factor_sets
            .into_iter()
            .map(|f| initial_lane(&structure, f))
            .collect::<Result<Vec<_>>>()?;
        let block_count = lanes.len().div_ceil(LANE_BLOCK).max(1);
        let width = lanes.len().div_ceil(block_count).max(1);
        let blocks = lanes.chunks(width).map(|c| LaneBlock::new(&structure, c)).collect();
        Ok(Self {
            structure,
            width,
            blocks,
        })
    }

    pub(crate) fn structure(&self) -> &Arc<ForestStructure> {
        &self.structure
    }

    fn locate(&self, lane: usize) -> (&LaneBlock<T>, usize) {
        (&self.blocks[lane / self.width], lane % self.width)
    }

    pub(crate) fn passes(&self, lane: usize) -> &[ComponentPass<T>] {
        let (b, k) = self.locate(lane);
        &b.states[k].passes
    }

    pub(crate) fn dirty_components(&self, lane: usize) -> Vec<ComponentId> {
        let (b, k) = self.locate(lane);
        let d = &b.states[k].dirty;
        (0..d.len()).filter(|&c| d[c]).map(ComponentId).collect()
    }

    pub(crate) fn clique(&self, lane: usize, clique: usize) -> Vec<T> {
        let (b, k) = self.locate(lane);
        b.column(clique_range(&self.structure, clique), k)
    }

    pub(crate) fn separator(&self, lane: usize, edge: usize) -> Vec<T> {
        let (b, k) = self.locate(lane);
        b.column(separator_range(&self.structure, edge), k)
    }

    pub(crate) fn node_posterior(&self, lane: usize, node: NodeId) -> Result<Vec<T>> {
        let clique = self
            .structure
            .readout_clique(node)
            .ok_or_else(|| InferenceError::NodeNotInForest(node.to_string()))?;
        self.node_posterior_in(lane, node, clique)
    }

    pub(crate) fn node_posterior_in(&self, lane: usize, node: NodeId, clique: usize) -> Result<Vec<T>> {
        let def = self
            .structure
            .cliques()
            .get(clique)
            .ok_or_else(|| InferenceError::Internal(format!("no clique {clique}")))?;
        let pos = def
            .position(node)
            .ok_or_else(|| InferenceError::NodeNotInForest(node.to_string()))?;
        let stride: usize = def.cards[pos + 1..].iter().product();
        let card = def.cards[pos];
        let (b, k) = self.locate(lane);
        let at = self.structure.layout.clique_offset[clique];
        let mut dist = vec![T::zero(); card];
        for i in 0..def.state_space_size {
            let v = (i / stride) % card;
            dist[v] = dist[v] + b.data[(at + i) * b.width + k];
        }
        let total: T = dist.iter().copied().sum();
        if total <= T::zero() {
            return Err(InferenceError::ImpossibleEvidence);
        }
        dist.iter_mut().for_each(|v| *v = *v / total);
        Ok(dist)
    }

    pub(crate) fn max_separator_discrepancy(&self, lane: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for e in self.structure.tree_edges() {
            let (a, b) = e.cliques;
            let mut ma = vec![T::zero(); e.separator_size];
            let mut mb = vec![T::zero(); e.separator_size];
            for (v, &j) in self.clique(lane, a).iter().zip(e.map_for(a)) {
                ma[j] = ma[j] + *v;
            }
            for (v, &j) in self.clique(lane, b).iter().zip(e.map_for(b)) {
                mb[j] = mb[j] + *v;
            }
            worst = worst.max(crate::scalar::max_abs_diff(&ma, &mb));
        }
        worst
    }

    /// Enters observations into one lane without propagating. Validation
    /// happens before any mutation; re-observing a node with the same value
    /// is a no-op.
    pub(crate) fn enter_evidence(&mut self, lane: usize, evidence: &Evidence) -> Result<()> {
        let (b, k) = (lane / self.width, lane % self.width);
        let block = &mut self.blocks[b];
        check_evidence(&self.structure, &block.states[k], evidence)?;
        block.enter(&self.structure, k, evidence);
        Ok(())
    }

    pub(crate) fn mark_all_dirty(&mut self, lane: usize) {
        let (b, k) = (lane / self.width, lane % self.width);
        self.blocks[b].states[k].dirty.iter_mut().for_each(|d| *d = true);
    }

    /// Propagates the dirty components of the selected lanes without a
    /// checkpoint.
    pub(crate) fn propagate(&mut self, selected: &[bool]) -> Vec<Option<T>> {
        let s = &self.structure;
        self.blocks
            .iter_mut()
            .zip(selected.chunks(self.width))
            .flat_map(|(b, sel)| b.propagate(s, sel))
            .collect()
    }

    /// Checkpoints every block holding a selected lane, enters `evidence`
    /// into the selected lanes and propagates them. With `force_all`, every
    /// component of those lanes is propagated.
    ///
    /// Returns each selected lane's likelihood. Undo with
    /// [`rollback`](Self::rollback). Invalid evidence for any selected lane
    /// fails before anything changes.
    pub(crate) fn step(
        &mut self,
        selected: &[bool],
        evidence: &Evidence,
        touched: &[ComponentId],
        force_all: bool,
        parallel: bool,
    ) -> Result<Vec<Option<T>>> {
        let s: &ForestStructure = &self.structure;
        for (block, sel) in self.blocks.iter().zip(selected.chunks(self.width)) {
            for (st, _) in block.states.iter().zip(sel).filter(|(_, s)| **s) {
                check_evidence(s, st, evidence)?;
            }
        }
        let run = |(block, sel): (&mut LaneBlock<T>, &[bool])| {
            if !sel.iter().any(|s| *s) {
                block.checkpointed = false;
                return vec![None; sel.len()];
            }
            block.checkpoint(s, touched);
            for k in (0..sel.len()).filter(|&k| sel[k]) {
                block.enter(s, k, evidence);
                if force_all {
                    block.states[k].dirty.iter_mut().for_each(|d| *d = true);
                }
            }
            block.propagate(s, sel)
        };
        let per_block: Vec<Vec<Option<T>>> = if parallel {
            self.blocks
                .par_iter_mut()
                .zip(selected.par_chunks(self.width))
                .map(run)
                .collect()
        } else {
            self.blocks.iter_mut().zip(selected.chunks(self.width)).map(run).collect()
        };
        Ok(per_block.into_iter().flatten().collect())
    }

    /// Undoes the last [`step`](Self::step).
    pub(crate) fn rollback(&mut self) {
        let s = &self.structure;
        self.blocks.iter_mut().for_each(|b| b.rollback(s));
    }
}

/// Clique and separator potentials over a shared structure.
#[derive(Debug, Clone)]
pub struct CliqueForest<T> {
    lanes: ForestLanes<T>,
    evidence: Evidence,
}

/// Multiplies every factor into its home clique. All components start dirty.
pub fn initialize_potentials<T: Probability>(
    structure: Arc<ForestStructure>,
    factors: &FactorSet<T>,
) -> Result<CliqueForest<T>> {
    Ok(CliqueForest {
        lanes: ForestLanes::new(structure, [factors])?,
        evidence: Evidence::new(),
    })
}

impl<T: Probability> CliqueForest<T> {
    /// Builds, initializes and calibrates a forest for `factors`.
    ///
    /// The returned report carries the initial constants, i.e. the mass of
    /// each component (1 for an unconditioned network).
    pub fn calibrated(factors: &FactorSet<T>) -> Result<(Self, PropagationReport<T>)> {
        let structure = factors.structure()?;
        Self::calibrated_with(structure, factors)
    }

    pub fn calibrated_with(
        structure: Arc<ForestStructure>,
        factors: &FactorSet<T>,
    ) -> Result<(Self, PropagationReport<T>)> {
        let mut forest = initialize_potentials(structure, factors)?;
        let report = forest.propagate_raw();
        Ok((forest, report))
    }

    /// Calibrated clique forest for a whole network.
    pub fn from_network(net: &BeliefNetwork<T>) -> Result<Self> {
        let (forest, report) = Self::calibrated(&FactorSet::from_network(net))?;
        if report.passes.iter().any(|p| p.constant <= T::zero()) {
            return Err(InferenceError::ImpossibleEvidence);
        }
        Ok(forest)
    }

    pub fn structure(&self) -> &Arc<ForestStructure> {
        self.lanes.structure()
    }

    pub fn evidence(&self) -> &Evidence {
        &self.evidence
    }

    pub fn dirty_components(&self) -> Vec<ComponentId> {
        self.lanes.dirty_components(0)
    }

    pub fn mark_all_dirty(&mut self) {
        self.lanes.mark_all_dirty(0);
    }

    pub fn clique_potential(&self, clique: usize) -> PotentialTable<T> {
        let def = &self.structure().cliques()[clique];
        let values = self.lanes.clique(0, clique);
        PotentialTable::new(def.members.clone(), def.cards.clone(), values).expect("clique potentials keep their shape")
    }

    pub fn separator_potential(&self, edge: usize) -> Vec<T> {
        self.lanes.separator(0, edge)
    }

    /// Enters observations without propagating. Validation happens before
    /// any mutation; re-observing a node with the same value is a no-op.
    pub fn enter_evidence(&mut self, evidence: &Evidence) -> Result<()> {
        self.lanes.enter_evidence(0, evidence)?;
        self.note(evidence);
        Ok(())
    }

    fn note(&mut self, evidence: &Evidence) {
        for (node, value) in evidence.iter() {
            self.evidence.observe(node, value);
        }
    }

    /// Propagates dirty components; fails if any component constant is zero.
    pub fn propagate(&mut self) -> Result<PropagationReport<T>> {
        let report = self.propagate_raw();
        if report.passes.iter().any(|p| p.constant <= T::zero()) {
            return Err(InferenceError::ImpossibleEvidence);
        }
        Ok(report)
    }

    /// Propagates dirty components, accepting zero constants.
    pub fn propagate_raw(&mut self) -> PropagationReport<T> {
        self.lanes.propagate(&[true]);
        self.report()
    }

    fn report(&self) -> PropagationReport<T> {
        PropagationReport {
            passes: self.lanes.passes(0).to_vec(),
        }
    }

    /// Enter evidence and propagate; on failure the forest is left as it was.
    pub fn absorb(&mut self, evidence: &Evidence) -> Result<PropagationReport<T>> {
        let touched = self.structure().components_touching(evidence.nodes());
        self.lanes.step(&[true], evidence, &touched, false, false)?;
        let report = self.report();
        if report.passes.iter().any(|p| p.constant <= T::zero()) {
            self.lanes.rollback();
            return Err(InferenceError::ImpossibleEvidence);
        }
        self.note(evidence);
        Ok(report)
    }

    /// Posterior of `node`, read from its smallest containing clique.
    pub fn node_posterior(&self, node: NodeId) -> Result<Vec<T>> {
        self.lanes.node_posterior(0, node)
    }

    /// Posterior of `node` read from a specific clique.
    pub fn node_posterior_in(&self, node: NodeId, clique: usize) -> Result<Vec<T>> {
        self.lanes.node_posterior_in(0, node, clique)
    }

    /// Largest disagreement between a separator-marginal computed from the
    /// two endpoint cliques of any tree edge.
    pub fn max_separator_discrepancy(&self) -> f64 {
        self.lanes.max_separator_discrepancy(0)
    }
}
