//! Brute-force reference inference by summing the full joint distribution.
//!
//! Nothing here is factored or cached: every assignment consistent with the
//! evidence is visited and its chain-rule product recomputed from scratch.
//! The engines are checked against these functions, so they must stay naive.

use super::{BeliefNetwork, Evidence, NodeId};
use crate::error::{InferenceError, Result};
use crate::scalar::Probability;

/// Chain-rule probability of a full assignment (one value index per node).
pub fn joint_probability<T: Probability>(net: &BeliefNetwork<T>, assignment: &[usize]) -> Result<T> {
    if assignment.len() != net.node_count() {
        return Err(InferenceError::IncompleteAssignment {
            expected: net.node_count(),
            found: assignment.len(),
        });
    }
    for id in net.node_ids() {
        if assignment[id.0] >= net.cardinality(id) {
            return Err(InferenceError::UnknownValue {
                node: net.node(id).id.clone(),
                value: assignment[id.0].to_string(),
            });
        }
    }
    Ok(joint_unchecked(net, assignment))
}

fn joint_unchecked<T: Probability>(net: &BeliefNetwork<T>, assignment: &[usize]) -> T {
    let mut p = T::one();
    for id in net.node_ids() {
        p = p * net.conditional(id, assignment[id.0], assignment);
    }
    p
}

/// Calls `visit` with every full assignment that agrees with `evidence`.
fn for_each_completion<T: Probability>(
    net: &BeliefNetwork<T>,
    evidence: &Evidence,
    mut visit: impl FnMut(&[usize]),
) {
    let mut assignment = vec![0usize; net.node_count()];
    for (node, value) in evidence.iter() {
        assignment[node.0] = value;
    }
    let free: Vec<NodeId> = net.node_ids().filter(|n| !evidence.contains(*n)).collect();
    loop {
        visit(&assignment);
        // Odometer increment over the free nodes, last node fastest.
        let mut k = free.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            let node = free[k];
            assignment[node.0] += 1;
            if assignment[node.0] < net.cardinality(node) {
                break;
            }
            assignment[node.0] = 0;
        }
    }
}

/// P(evidence), summed over every completion. Zero is a legal result.
pub fn evidence_likelihood_oracle<T: Probability>(net: &BeliefNetwork<T>, evidence: &Evidence) -> Result<T> {
    net.validate_evidence(evidence)?;
    let mut total = T::zero();
    for_each_completion(net, evidence, |a| total = total + joint_unchecked(net, a));
    Ok(total)
}

/// Posterior of `query` given `evidence`.
pub fn enumerate_posterior<T: Probability>(
    net: &BeliefNetwork<T>,
    query: NodeId,
    evidence: &Evidence,
) -> Result<Vec<T>> {
    if query.0 >= net.node_count() {
        return Err(InferenceError::UnknownNode(query.to_string()));
    }
    net.validate_evidence(evidence)?;
    let mut dist = vec![T::zero(); net.cardinality(query)];
    for_each_completion(net, evidence, |a| {
        dist[a[query.0]] = dist[a[query.0]] + joint_unchecked(net, a);
    });
    finish(dist)
}

/// Posteriors of every node in one pass over the joint.
pub fn enumerate_all_posteriors<T: Probability>(net: &BeliefNetwork<T>, evidence: &Evidence) -> Result<Vec<Vec<T>>> {
    net.validate_evidence(evidence)?;
    let mut dists: Vec<Vec<T>> = net.node_ids().map(|n| vec![T::zero(); net.cardinality(n)]).collect();
    for_each_completion(net, evidence, |a| {
        let p = joint_unchecked(net, a);
        for (node, dist) in dists.iter_mut().enumerate() {
            dist[a[node]] = dist[a[node]] + p;
        }
    });
    dists.into_iter().map(finish).collect()
}

fn finish<T: Probability>(mut dist: Vec<T>) -> Result<Vec<T>> {
    let total: T = dist.iter().copied().sum();
    if total <= T::zero() {
        return Err(InferenceError::ImpossibleEvidence);
    }
    for v in dist.iter_mut() {
        *v = *v / total;
    }
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::{chain, disease_feature};
    use crate::network::NetworkBuilder;

    fn one_node() -> BeliefNetwork<f64> {
        NetworkBuilder::new().node("D", &["d1", "d2"], &[], &[0.6, 0.4]).build().unwrap()
    }

    #[test]
    fn joint_examples() {
        assert_eq!(joint_probability(&one_node(), &[0]).unwrap(), 0.6);
        let p = joint_probability(&disease_feature(), &[0, 0]).unwrap();
        assert!((p - 0.48).abs() < 1e-15);
        assert!(matches!(
            joint_probability(&disease_feature(), &[0]),
            Err(InferenceError::IncompleteAssignment { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn zero_entry_annihilates() {
        let net: BeliefNetwork<f64> = NetworkBuilder::new()
            .node("D", &["d1", "d2"], &[], &[1.0, 0.0])
            .node("F", &["t", "f"], &["D"], &[0.8, 0.2, 0.3, 0.7])
            .build()
            .unwrap();
        assert_eq!(joint_probability(&net, &[1, 0]).unwrap(), 0.0);
    }

    #[test]
    fn posterior_examples() {
        let prior = enumerate_posterior(&one_node(), NodeId(0), &Evidence::new()).unwrap();
        assert_eq!(prior, vec![0.6, 0.4]);

        let net = disease_feature();
        let ev = Evidence::new().with(NodeId(1), 0);
        let post = enumerate_posterior(&net, NodeId(0), &ev).unwrap();
        assert!((post[0] - 0.8).abs() < 1e-12 && (post[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn deterministic_contradiction_is_impossible() {
        let net: BeliefNetwork<f64> = NetworkBuilder::new()
            .node("D", &["d1", "d2"], &[], &[0.6, 0.4])
            .node("F", &["t", "f"], &["D"], &[0.0, 1.0, 0.0, 1.0])
            .build()
            .unwrap();
        let ev = Evidence::new().with(NodeId(1), 0);
        assert_eq!(
            enumerate_posterior(&net, NodeId(0), &ev),
            Err(InferenceError::ImpossibleEvidence)
        );
        assert_eq!(evidence_likelihood_oracle(&net, &ev).unwrap(), 0.0);
    }

    #[test]
    fn likelihood_examples() {
        assert_eq!(evidence_likelihood_oracle(&one_node(), &Evidence::new()).unwrap(), 1.0);
        let p = evidence_likelihood_oracle(&disease_feature(), &Evidence::new().with(NodeId(1), 0)).unwrap();
        assert!((p - 0.60).abs() < 1e-12);
        let p = evidence_likelihood_oracle(&one_node(), &Evidence::new().with(NodeId(0), 0)).unwrap();
        assert_eq!(p, 0.6);
    }

    #[test]
    fn all_posteriors_match_single_queries() {
        let net = chain();
        let ev = Evidence::new().with(NodeId(2), 1);
        let all = enumerate_all_posteriors(&net, &ev).unwrap();
        for id in net.node_ids() {
            let single = enumerate_posterior(&net, id, &ev).unwrap();
            assert!(crate::scalar::max_abs_diff(&all[id.0], &single) < 1e-15);
        }
    }
}
