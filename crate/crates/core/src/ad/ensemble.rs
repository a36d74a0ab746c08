//! Per-instance clique forests and the instance weights.
//!
//! All instances share one [`ForestStructure`]; only potentials are
//! replicated. Absorbing evidence propagates each instance's dirty
//! components, reads `ℓ_i = P(E_new | c_i, E_old)` from the component
//! constants, and updates `w_i ← α ℓ_i w_i`. Weights are updated in log space
//! so long evidence sequences cannot underflow them.

use std::sync::Arc;


use super::cutset::{decompose, LoopCutset};
use crate::ctp::{ComponentId, ForestLanes, ForestStructure};
use crate::error::{InferenceError, Result};
use crate::network::{BeliefNetwork, Evidence, NodeId};
use crate::scalar::Probability;

#[derive(Debug, Clone, PartialEq)]
pub struct CutsetInstance<T> {
    pub assignment: Vec<usize>,
    /// Current posterior probability of the instance.
    pub weight: T,
    /// Sum of `ln ℓ` over every absorption, i.e. `ln P(E | instance)`.
    pub log_scale: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodRecord<T> {
    /// `ℓ_i`, the probability of the new evidence given instance `i` and the
    /// evidence absorbed before.
    pub likelihoods: Vec<T>,
    /// `1 / Σ_j ℓ_j w_j`.
    pub alpha: T,
    pub log_alpha: T,
}

/// Aggregate propagation work of one absorption.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PropagationSummary {
    pub touched_components: Vec<ComponentId>,
    /// Messages per component for a single instance.
    pub messages_per_component: Vec<(ComponentId, usize)>,
    pub instances_propagated: usize,
    /// Messages summed over all propagated instances.
    pub messages_passed: usize,
}

impl PropagationSummary {
    /// Messages passed in `component`, summed over instances.
    pub fn messages_in(&self, component: ComponentId) -> usize {
        self.messages_per_component
            .iter()
            .find(|(c, _)| *c == component)
            .map_or(0, |(_, m)| m * self.instances_propagated)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PropagationScope {
    /// Propagate only components that received new evidence.
    #[default]
    Selective,
    /// Propagate every component on every absorption.
    AllComponents,
}

/// Result of propagating a batch of instances, not yet committed.
pub(crate) struct Batch<T> {
    pub(crate) likelihoods: Vec<Option<T>>,
    pub(crate) summary: PropagationSummary,
}

#[derive(Debug, Clone)]
pub struct CutsetEnsemble<T> {
    net: Arc<BeliefNetwork<T>>,
    cutset: LoopCutset,
    instances: Vec<CutsetInstance<T>>,
    /// One lane of potentials per instance, in instance order.
    lanes: ForestLanes<T>,
    evidence: Evidence,
    parallel: bool,
    scope: PropagationScope,
    last_summary: Option<PropagationSummary>,
}

/// Builds one calibrated forest per cutset instance and the prior weights.
///
/// Each instance's initial propagation yields the mass of its conditioned
/// factors, `P(cutset = c_i)`. For root members that is just the product of
/// their priors; otherwise it comes from the clique-tree pass itself.
pub fn init_ensemble<T: Probability>(net: &BeliefNetwork<T>, cutset: LoopCutset) -> Result<CutsetEnsemble<T>> {
    CutsetEnsemble::new(Arc::new(net.clone()), cutset)
}

impl<T: Probability> CutsetEnsemble<T> {
    pub fn new(net: Arc<BeliefNetwork<T>>, cutset: LoopCutset) -> Result<Self> {
        let n = cutset.instance_count();
        let mut factor_sets = Vec::with_capacity(n);
        let mut instances = Vec::with_capacity(n);
        for i in 0..n {
            let assignment = cutset.assignment(i);
            factor_sets.push(decompose(&net, &cutset, &assignment)?.factor_set());
            instances.push(CutsetInstance {
                assignment,
                weight: T::zero(),
                log_scale: T::zero(),
            });
        }
        // Conditioning never changes the graph, only table values, so the
        // first instance's structure serves all of them.
        let structure = factor_sets[0].structure()?;
        let mut lanes = ForestLanes::new(structure, &factor_sets)?;
        let masses: Vec<T> = lanes
            .propagate(&vec![true; n])
            .into_iter()
            .zip(&factor_sets)
            .map(|(m, f)| f.scalar() * m.expect("every lane selected"))
            .collect();
        let total: T = masses.iter().copied().sum();
        let tolerance = (64.0 * T::epsilon().as_f64() * masses.len() as f64).max(1e-9);
        if (total.as_f64() - 1.0).abs() > tolerance {
            return Err(InferenceError::Internal(format!(
                "cutset prior masses sum to {total}, expected 1"
            )));
        }
        for (inst, m) in instances.iter_mut().zip(masses) {
            inst.weight = m / total;
        }
        Ok(Self {
            net,
            cutset,
            instances,
            lanes,
            evidence: Evidence::new(),
            parallel: false,
            scope: PropagationScope::Selective,
            last_summary: None,
        })
    }

    pub fn network(&self) -> &Arc<BeliefNetwork<T>> {
        &self.net
    }

    pub fn cutset(&self) -> &LoopCutset {
        &self.cutset
    }

    pub fn structure(&self) -> &Arc<ForestStructure> {
        self.lanes.structure()
    }

    pub fn instance_count(&self) -> usize {
        self.instances.len()
    }

    pub fn instance(&self, i: usize) -> &CutsetInstance<T> {
        &self.instances[i]
    }

    pub fn instances(&self) -> impl Iterator<Item = &CutsetInstance<T>> {
        self.instances.iter()
    }

    /// `P(node | E, c_i)` for a node outside the cutset, read from
    /// instance `i`'s forest.
    pub fn instance_posterior(&self, i: usize, node: NodeId) -> Result<Vec<T>> {
        self.lanes.node_posterior(i, node)
    }

    /// Evidence absorbed so far.
    pub fn evidence(&self) -> &Evidence {
        &self.evidence
    }

    pub fn set_parallel(&mut self, parallel: bool) {
        self.parallel = parallel;
    }

    pub fn set_scope(&mut self, scope: PropagationScope) {
        self.scope = scope;
    }

    /// Display label of an instance, e.g. `D=d1` or `A=a0,B=b2`.
    pub fn instance_label(&self, i: usize) -> String {
        let assignment = &self.instances[i].assignment;
        if self.cutset.members().len() == 1 {
            let node = self.net.node(self.cutset.members()[0]);
            return node.values[assignment[0]].clone();
        }
        self.cutset
            .members()
            .iter()
            .zip(assignment)
            .map(|(m, &v)| {
                let node = self.net.node(*m);
                format!("{}={}", node.id, node.values[v])
            })
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Current instance weights, i.e. the posterior over cutset instances.
    pub fn cutset_posterior(&self) -> Vec<T> {
        self.instances.iter().map(|s| s.weight).collect()
    }

    /// Posterior of a single cutset member, summing weights over the other
    /// members' values.
    pub fn member_marginal(&self, node: NodeId) -> Result<Vec<T>> {
        let pos = self
            .cutset
            .members()
            .iter()
            .position(|m| *m == node)
            .ok_or_else(|| InferenceError::InvalidCutset(format!("{node} is not a cutset member")))?;
        let mut dist = vec![T::zero(); self.cutset.cards()[pos]];
        for s in &self.instances {
            let v = s.assignment[pos];
            dist[v] = dist[v] + s.weight;
        }
        Ok(dist)
    }

    /// `Σ_i w_i P(node | E, c_i)` for a node outside the cutset.
    pub fn feature_posterior(&self, node: NodeId) -> Result<Vec<T>> {
        if node.0 >= self.net.node_count() {
            return Err(InferenceError::UnknownNode(node.to_string()));
        }
        if self.cutset.contains(node) {
            return Err(InferenceError::CutsetQuery {
                node: self.net.node(node).id.clone(),
            });
        }
        let mut dist = vec![T::zero(); self.net.cardinality(node)];
        for (i, s) in self.instances.iter().enumerate() {
            let w = s.weight;
            if w == T::zero() {
                continue;
            }
            let p = self.lanes.node_posterior(i, node)?;
            for (d, v) in dist.iter_mut().zip(p) {
                *d = *d + w * v;
            }
        }
        crate::scalar::normalize(&mut dist);
        Ok(dist)
    }

    pub fn propagation_summary(&self) -> Option<&PropagationSummary> {
        self.last_summary.as_ref()
    }

    /// Validates `new` against the network and the absorbed evidence and
    /// drops observations that repeat an absorbed value.
    pub(crate) fn fresh_evidence(&self, new: &Evidence) -> Result<Evidence> {
        self.net.validate_evidence(new)?;
        let mut fresh = Evidence::new();
        for (node, value) in new.iter() {
            if self.cutset.contains(node) {
                return Err(InferenceError::CutsetEvidence {
                    node: self.net.node(node).id.clone(),
                });
            }
            match self.evidence.get(node) {
                Some(prev) if prev == value => {}
                Some(_) => {
                    return Err(InferenceError::Conflict {
                        node: self.net.node(node).id.clone(),
                    })
                }
                None => {
                    fresh.observe(node, value);
                }
            }
        }
        Ok(fresh)
    }

    /// Enters `evidence` into the selected instances and propagates them,
    /// keeping checkpoints so the batch can be undone.
    pub(crate) fn propagate_batch(&mut self, evidence: &Evidence, selected: &[bool]) -> Result<Batch<T>> {
        let all = self.scope == PropagationScope::AllComponents;
        let structure = Arc::clone(self.lanes.structure());
        let touched: Vec<ComponentId> = if all {
            structure.components().iter().map(|c| c.id).collect()
        } else {
            structure.components_touching(evidence.nodes())
        };

        let likelihoods = self.lanes.step(selected, evidence, &touched, all, self.parallel)?;
        let first = selected.iter().position(|s| *s);
        let passes = first.map_or(&[][..], |i| self.lanes.passes(i));
        let propagated = selected.iter().filter(|s| **s).count();
        let messages_passed = (0..selected.len())
            .filter(|&i| selected[i])
            .flat_map(|i| self.lanes.passes(i))
            .map(|p| p.messages)
            .sum();
        let summary = PropagationSummary {
            touched_components: passes.iter().map(|p| p.component).collect(),
            messages_per_component: passes.iter().map(|p| (p.component, p.messages)).collect(),
            instances_propagated: propagated,
            messages_passed,
        };
        Ok(Batch { likelihoods, summary })
    }

    pub(crate) fn rollback(&mut self, _batch: Batch<T>) {
        self.lanes.rollback();
    }

    pub(crate) fn record_evidence(&mut self, fresh: &Evidence, summary: PropagationSummary) {
        for (node, value) in fresh.iter() {
            self.evidence.observe(node, value);
        }
        self.last_summary = Some(summary);
    }

    pub(crate) fn set_weights(&mut self, weights: &[T], log_likelihoods: &[T]) {
        for ((s, &w), &l) in self.instances.iter_mut().zip(weights).zip(log_likelihoods) {
            s.weight = w;
            s.log_scale = s.log_scale + l;
        }
    }

    /// Absorbs `new` evidence and updates the weights.
    ///
    /// Fails without changing anything when the evidence has zero
    /// probability under every instance, conflicts with absorbed evidence,
    /// or observes a cutset member.
    pub fn absorb_evidence(&mut self, new: &Evidence) -> Result<LikelihoodRecord<T>> {
        let fresh = self.fresh_evidence(new)?;
        let n = self.instances.len();
        if fresh.is_empty() {
            self.last_summary = Some(PropagationSummary::default());
            return Ok(LikelihoodRecord {
                likelihoods: vec![T::one(); n],
                alpha: T::one(),
                log_alpha: T::zero(),
            });
        }
        let batch = self.propagate_batch(&fresh, &vec![true; n])?;
        let likelihoods: Vec<T> = batch
            .likelihoods
            .iter()
            .map(|l| l.expect("every instance was propagated"))
            .collect();
        let weights = self.cutset_posterior();
        let log_l: Vec<T> = likelihoods.iter().map(|l| l.ln()).collect();
        let log_terms: Vec<T> = weights.iter().zip(&log_l).map(|(w, l)| w.ln() + *l).collect();
        let max = log_terms.iter().copied().fold(T::neg_infinity(), T::max);
        if max == T::neg_infinity() {
            self.rollback(batch);
            return Err(InferenceError::ImpossibleEvidence);
        }
        let scaled: Vec<T> = log_terms.iter().map(|t| (*t - max).exp()).collect();
        let sum: T = scaled.iter().copied().sum();
        let new_weights: Vec<T> = scaled.iter().map(|s| *s / sum).collect();
        let log_total = max + sum.ln();
        let total: T = weights.iter().zip(&likelihoods).map(|(w, l)| *w * *l).sum();

        self.set_weights(&new_weights, &log_l);
        self.record_evidence(&fresh, batch.summary);
        Ok(LikelihoodRecord {
            likelihoods,
            alpha: T::one() / total,
            log_alpha: -log_total,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ad::cutset::{select_cutset, CutsetStrategy};
    use crate::network::fixtures::disease_feature;
    use crate::network::{enumerate_posterior, NetworkBuilder};
    use crate::scalar::max_abs_diff;

    fn ensemble(net: &BeliefNetwork<f64>, members: &[&str]) -> CutsetEnsemble<f64> {
        let cutset = select_cutset(
            net,
            &CutsetStrategy::Explicit(members.iter().map(|s| s.to_string()).collect()),
        )
        .unwrap();
        init_ensemble(net, cutset).unwrap()
    }

    #[test]
    fn prior_weights_read_from_root() {
        let e = ensemble(&disease_feature(), &["D"]);
        assert!(max_abs_diff(&e.cutset_posterior(), &[0.6, 0.4]) < 1e-15);
    }

    #[test]
    fn uniform_prior_over_63() {
        let vals: Vec<String> = (0..63).map(|i| format!("dx{i}")).collect();
        let refs: Vec<&str> = vals.iter().map(String::as_str).collect();
        let mut cpt = Vec::new();
        for _ in 0..63 {
            cpt.extend([0.5, 0.5]);
        }
        let net: BeliefNetwork<f64> = NetworkBuilder::new()
            .node("D", &refs, &[], &[1.0 / 63.0; 63])
            .node("F", &["t", "f"], &["D"], &cpt)
            .build()
            .unwrap();
        let e = ensemble(&net, &["D"]);
        assert!(e.cutset_posterior().iter().all(|w| (w - 1.0 / 63.0).abs() < 1e-12));
    }

    #[test]
    fn independent_roots_multiply() {
        let net: BeliefNetwork<f64> = NetworkBuilder::new()
            .node("A", &["0", "1"], &[], &[0.5, 0.5])
            .node("B", &["0", "1"], &[], &[0.2, 0.8])
            .node("F", &["0", "1"], &["A", "B"], &[0.1, 0.9, 0.2, 0.8, 0.3, 0.7, 0.4, 0.6])
            .build()
            .unwrap();
        let e = ensemble(&net, &["A", "B"]);
        assert!(max_abs_diff(&e.cutset_posterior(), &[0.10, 0.40, 0.10, 0.40]) < 1e-12);
        assert!(max_abs_diff(&e.member_marginal(NodeId(1)).unwrap(), &[0.2, 0.8]) < 1e-12);
    }

    #[test]
    fn empty_absorption_is_a_noop() {
        let mut e = ensemble(&disease_feature(), &["D"]);
        let rec = e.absorb_evidence(&Evidence::new()).unwrap();
        assert_eq!(rec.likelihoods, vec![1.0, 1.0]);
        assert_eq!(rec.alpha, 1.0);
        assert!(max_abs_diff(&e.cutset_posterior(), &[0.6, 0.4]) < 1e-15);
    }

    #[test]
    fn single_feature_update() {
        let mut e = ensemble(&disease_feature(), &["D"]);
        let rec = e.absorb_evidence(&Evidence::new().with(NodeId(1), 0)).unwrap();
        assert!(max_abs_diff(&rec.likelihoods, &[0.8, 0.3]) < 1e-12);
        assert!((rec.alpha - 1.0 / 0.6).abs() < 1e-12);
        assert!(max_abs_diff(&e.cutset_posterior(), &[0.8, 0.2]) < 1e-12);
        assert_eq!(e.feature_posterior(NodeId(1)).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn prior_feature_mixture() {
        let e = ensemble(&disease_feature(), &["D"]);
        let f = e.feature_posterior(NodeId(1)).unwrap();
        assert!(max_abs_diff(&f, &[0.60, 0.40]) < 1e-12);
        assert!(matches!(
            e.feature_posterior(NodeId(0)),
            Err(InferenceError::CutsetQuery { .. })
        ));
    }

    #[test]
    fn degenerate_weights_give_instance_posterior() {
        let net: BeliefNetwork<f64> = NetworkBuilder::new()
            .node("D", &["d1", "d2"], &[], &[1.0, 0.0])
            .node("F", &["t", "f"], &["D"], &[0.8, 0.2, 0.3, 0.7])
            .build()
            .unwrap();
        let e = ensemble(&net, &["D"]);
        assert_eq!(e.cutset_posterior(), vec![1.0, 0.0]);
        let f = e.feature_posterior(NodeId(1)).unwrap();
        assert_eq!(f, e.instance_posterior(0, NodeId(1)).unwrap());
    }

    #[test]
    fn impossible_evidence_leaves_ensemble_unchanged() {
        let net: BeliefNetwork<f64> = NetworkBuilder::new()
            .node("D", &["d1", "d2"], &[], &[0.6, 0.4])
            .node("F", &["t", "f"], &["D"], &[0.0, 1.0, 0.0, 1.0])
            .node("G", &["t", "f"], &["D"], &[0.5, 0.5, 0.9, 0.1])
            .build()
            .unwrap();
        let mut e = ensemble(&net, &["D"]);
        e.absorb_evidence(&Evidence::new().with(NodeId(2), 0)).unwrap();
        let before = e.cutset_posterior();
        let g_before = e.feature_posterior(NodeId(1)).unwrap();
        assert_eq!(
            e.absorb_evidence(&Evidence::new().with(NodeId(1), 0)),
            Err(InferenceError::ImpossibleEvidence)
        );
        assert_eq!(e.cutset_posterior(), before);
        assert_eq!(e.feature_posterior(NodeId(1)).unwrap(), g_before);
        assert!(!e.evidence().contains(NodeId(1)));
    }

    #[test]
    fn conflicts_and_cutset_observations_are_rejected() {
        let mut e = ensemble(&disease_feature(), &["D"]);
        assert!(matches!(
            e.absorb_evidence(&Evidence::new().with(NodeId(0), 0)),
            Err(InferenceError::CutsetEvidence { .. })
        ));
        e.absorb_evidence(&Evidence::new().with(NodeId(1), 0)).unwrap();
        assert!(matches!(
            e.absorb_evidence(&Evidence::new().with(NodeId(1), 1)),
            Err(InferenceError::Conflict { .. })
        ));
        // Same value again is accepted and changes nothing.
        let rec = e.absorb_evidence(&Evidence::new().with(NodeId(1), 0)).unwrap();
        assert_eq!(rec.likelihoods, vec![1.0, 1.0]);
    }

    #[test]
    fn non_root_cutset_matches_oracle() {
        let net: BeliefNetwork<f64> = NetworkBuilder::new()
            .node("A", &["0", "1"], &[], &[0.3, 0.7])
            .node("B", &["0", "1", "2"], &["A"], &[0.2, 0.5, 0.3, 0.6, 0.1, 0.3])
            .node("C", &["0", "1"], &["B"], &[0.9, 0.1, 0.4, 0.6, 0.25, 0.75])
            .node("E", &["0", "1"], &["A", "B"], &[0.1, 0.9, 0.5, 0.5, 0.7, 0.3, 0.2, 0.8, 0.6, 0.4, 0.35, 0.65])
            .build()
            .unwrap();
        let mut e = ensemble(&net, &["B"]);
        let prior = enumerate_posterior(&net, NodeId(1), &Evidence::new()).unwrap();
        assert!(max_abs_diff(&e.cutset_posterior(), &prior) < 1e-12);
        let ev = Evidence::new().with(NodeId(2), 1).with(NodeId(3), 0);
        e.absorb_evidence(&ev).unwrap();
        let post = enumerate_posterior(&net, NodeId(1), &ev).unwrap();
        assert!(max_abs_diff(&e.cutset_posterior(), &post) < 1e-12);
        let a = enumerate_posterior(&net, NodeId(0), &ev).unwrap();
        assert!(max_abs_diff(&e.feature_posterior(NodeId(0)).unwrap(), &a) < 1e-12);
    }

    #[test]
    fn instance_labels() {
        let e = ensemble(&disease_feature(), &["D"]);
        assert_eq!(e.instance_label(1), "d2");
    }
}
