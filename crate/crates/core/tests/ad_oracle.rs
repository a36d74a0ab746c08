mod common;

use std::sync::Arc;

use adinfer::ad::{conditioned_component_count, init_ensemble, select_cutset, CutsetStrategy, PropagationScope};
use adinfer::network::random::{random_network, RandomNetworkConfig};
use adinfer::network::{enumerate_posterior, evidence_likelihood_oracle};
use adinfer::scalar::max_abs_diff;
use adinfer::{CutsetEnsemble, Ensemble, Evidence, InferenceError, Network, NetworkBuilder, NodeId};
use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn check_ensemble(net: &Network, ensemble: &Ensemble, ev: &Evidence) -> Result<(), TestCaseError> {
    let cutset = ensemble.cutset();
    for (pos, &m) in cutset.members().iter().enumerate() {
        let expected = enumerate_posterior(net, m, ev).unwrap();
        let got = ensemble.member_marginal(m).unwrap();
        prop_assert!(max_abs_diff(&got, &expected) < 1e-9, "cutset member {}", pos);
    }
    for n in non_cutset(net, cutset) {
        let expected = enumerate_posterior(net, n, ev).unwrap();
        let got = ensemble.feature_posterior(n).unwrap();
        prop_assert!(max_abs_diff(&got, &expected) < 1e-9, "node {}", n);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn root_cutset_matches_enumeration(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let net = small_network(&mut rng);
        let cutset = random_root_cutset(&net, &mut rng);
        let candidates = non_cutset(&net, &cutset);
        let ev = evidence_on(&net, &mut rng, &candidates, 4);
        let mut ensemble = init_ensemble(&net, cutset).unwrap();
        let prior = ensemble.cutset_posterior();
        let record = ensemble.absorb_evidence(&ev).unwrap();
        check_ensemble(&net, &ensemble, &ev)?;

        let pe: f64 = prior.iter().zip(&record.likelihoods).map(|(w, l)| w * l).sum();
        let oracle = evidence_likelihood_oracle(&net, &ev).unwrap();
        prop_assert!((pe - oracle).abs() < 1e-9);
        prop_assert!((record.alpha * oracle - 1.0).abs() < 1e-9);
    }

    #[test]
    fn arbitrary_cutsets_match_enumeration(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let net = random_network(&mut rng, &RandomNetworkConfig { min_nodes: 2, max_nodes: 8, ..Default::default() });
        let mut ids: Vec<String> = net.nodes().iter().map(|d| d.id.clone()).collect();
        ids.shuffle(&mut rng);
        let k = rng.gen_range(1..=2.min(ids.len() - 1));
        ids.truncate(k);
        let cutset = select_cutset(&net, &CutsetStrategy::Explicit(ids)).unwrap();
        let candidates = non_cutset(&net, &cutset);
        let ev = evidence_on(&net, &mut rng, &candidates, 3);
        let mut ensemble = init_ensemble(&net, cutset).unwrap();
        ensemble.absorb_evidence(&ev).unwrap();
        check_ensemble(&net, &ensemble, &ev)?;
    }

    #[test]
    fn incremental_equals_batch_and_log_scale_tracks_likelihood(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let net = small_network(&mut rng);
        let cutset = random_root_cutset(&net, &mut rng);
        let candidates = non_cutset(&net, &cutset);
        let ev = evidence_on(&net, &mut rng, &candidates, 4);
        let mut batch = init_ensemble(&net, cutset.clone()).unwrap();
        batch.absorb_evidence(&ev).unwrap();
        let mut step = init_ensemble(&net, cutset).unwrap();
        for (n, v) in ev.iter() {
            step.absorb_evidence(&Evidence::new().with(n, v)).unwrap();
        }
        prop_assert!(max_abs_diff(&batch.cutset_posterior(), &step.cutset_posterior()) < 1e-10);
        for (a, b) in batch.instances().zip(step.instances()) {
            if a.log_scale.is_finite() {
                prop_assert!((a.log_scale - b.log_scale).abs() < 1e-9);
            } else {
                prop_assert!(!b.log_scale.is_finite());
            }
        }
    }

    #[test]
    fn parallel_and_serial_agree_exactly(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let net = small_network(&mut rng);
        let cutset = random_root_cutset(&net, &mut rng);
        let candidates = non_cutset(&net, &cutset);
        let ev = evidence_on(&net, &mut rng, &candidates, 4);
        let mut serial = init_ensemble(&net, cutset.clone()).unwrap();
        let mut parallel = init_ensemble(&net, cutset).unwrap();
        parallel.set_parallel(true);
        serial.absorb_evidence(&ev).unwrap();
        parallel.absorb_evidence(&ev).unwrap();
        prop_assert_eq!(serial.cutset_posterior(), parallel.cutset_posterior());
    }

    #[test]
    fn selective_equals_forced_propagation(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let net = small_network(&mut rng);
        let cutset = random_root_cutset(&net, &mut rng);
        let candidates = non_cutset(&net, &cutset);
        let ev = evidence_on(&net, &mut rng, &candidates, 4);
        let mut selective = init_ensemble(&net, cutset.clone()).unwrap();
        let mut forced = init_ensemble(&net, cutset).unwrap();
        forced.set_scope(PropagationScope::AllComponents);
        selective.absorb_evidence(&ev).unwrap();
        forced.absorb_evidence(&ev).unwrap();
        prop_assert!(max_abs_diff(&selective.cutset_posterior(), &forced.cutset_posterior()) < 1e-12);
        for n in non_cutset(&net, selective.cutset()) {
            let a = selective.feature_posterior(n).unwrap();
            let b = forced.feature_posterior(n).unwrap();
            prop_assert!(max_abs_diff(&a, &b) < 1e-12);
        }
    }

    #[test]
    fn conditioning_never_merges_components(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let net = small_network(&mut rng);
        let before = conditioned_component_count(&net, &[]);
        let member = NodeId(rng.gen_range(0..net.node_count()));
        // Conditioning on a node with no neighbours removes its component.
        let isolated = net.parents(member).is_empty() && net.children(member).is_empty();
        let after = conditioned_component_count(&net, &[member]);
        prop_assert!(after + usize::from(isolated) >= before);
    }
}

#[test]
fn auto_cutset_splits_a_star() {
    let vals = ["d0", "d1", "d2"];
    let mut b = NetworkBuilder::new().node("D", &vals, &[], &[0.2, 0.3, 0.5]);
    for i in 0..4 {
        b = b.node(&format!("F{i}"), &["t", "f"], &["D"], &[0.9, 0.1, 0.5, 0.5, 0.2, 0.8]);
    }
    let net: Network = b.build().unwrap();
    let cutset = select_cutset(&net, &CutsetStrategy::Auto).unwrap();
    assert_eq!(cutset.members(), &[NodeId(0)]);
    assert_eq!(conditioned_component_count(&net, cutset.members()), 4);
}

#[test]
fn impossible_evidence_rolls_back_every_instance() {
    let net: Network = NetworkBuilder::new()
        .node("D", &["d0", "d1"], &[], &[0.5, 0.5])
        .node("F", &["t", "f"], &["D"], &[1.0, 0.0, 1.0, 0.0])
        .node("G", &["t", "f"], &["D"], &[0.3, 0.7, 0.6, 0.4])
        .build()
        .unwrap();
    let cutset = select_cutset(&net, &CutsetStrategy::Explicit(vec!["D".into()])).unwrap();
    let mut e = init_ensemble(&net, cutset).unwrap();
    e.absorb_evidence(&Evidence::new().with(NodeId(2), 0)).unwrap();
    let before = e.cutset_posterior();
    let bad = Evidence::new().with(NodeId(1), 1);
    assert_eq!(e.absorb_evidence(&bad).unwrap_err(), InferenceError::ImpossibleEvidence);
    assert_eq!(e.cutset_posterior(), before);
    assert_eq!(e.evidence().len(), 1);
    e.absorb_evidence(&Evidence::new().with(NodeId(1), 0)).unwrap();
}

#[test]
fn conflicting_and_cutset_observations_are_rejected() {
    let net: Network = NetworkBuilder::new()
        .node("D", &["d0", "d1"], &[], &[0.6, 0.4])
        .node("F", &["t", "f"], &["D"], &[0.8, 0.2, 0.3, 0.7])
        .build()
        .unwrap();
    let cutset = select_cutset(&net, &CutsetStrategy::Explicit(vec!["D".into()])).unwrap();
    let mut e = init_ensemble(&net, cutset).unwrap();
    e.absorb_evidence(&Evidence::new().with(NodeId(1), 0)).unwrap();
    assert!(max_abs_diff(&e.cutset_posterior(), &[0.8, 0.2]) < 1e-12);
    // Repeating the same value is harmless.
    e.absorb_evidence(&Evidence::new().with(NodeId(1), 0)).unwrap();
    assert!(matches!(
        e.absorb_evidence(&Evidence::new().with(NodeId(1), 1)),
        Err(InferenceError::Conflict { .. })
    ));
    assert!(matches!(
        e.absorb_evidence(&Evidence::new().with(NodeId(0), 1)),
        Err(InferenceError::CutsetEvidence { .. })
    ));
}

#[test]
fn f32_ensemble_tracks_f64() {
    for seed in 0..20 {
        let mut rng = rng(seed);
        let net = small_network(&mut rng);
        let cutset = random_root_cutset(&net, &mut rng);
        let candidates = non_cutset(&net, &cutset);
        let ev = evidence_on(&net, &mut rng, &candidates, 3);
        let mut wide = init_ensemble(&net, cutset.clone()).unwrap();
        let mut thin = CutsetEnsemble::new(Arc::new(net.cast::<f32>()), cutset).unwrap();
        wide.absorb_evidence(&ev).unwrap();
        thin.absorb_evidence(&ev).unwrap();
        for (a, b) in wide.cutset_posterior().iter().zip(thin.cutset_posterior()) {
            assert!((a - f64::from(b)).abs() < 1e-4);
        }
    }
}
