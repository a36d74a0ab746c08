#![allow(dead_code)]

use adinfer::ad::{select_cutset, CutsetStrategy, LoopCutset};
use adinfer::network::random::{random_evidence, random_network, RandomNetworkConfig};
use adinfer::{Evidence, Network, NodeId};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn small_network(rng: &mut ChaCha8Rng) -> Network {
    random_network(rng, &RandomNetworkConfig::default())
}

pub fn all_nodes(net: &Network) -> Vec<NodeId> {
    net.node_ids().collect()
}

pub fn evidence_on(net: &Network, rng: &mut ChaCha8Rng, candidates: &[NodeId], max: usize) -> Evidence {
    random_evidence(net, rng, candidates, max)
}

/// A uniformly chosen root as a single-member cutset.
pub fn random_root_cutset(net: &Network, rng: &mut ChaCha8Rng) -> LoopCutset {
    let roots: Vec<NodeId> = net.node_ids().filter(|&n| net.is_root(n)).collect();
    let root = *roots.choose(rng).expect("every DAG has a root");
    select_cutset(net, &CutsetStrategy::Explicit(vec![net.node(root).id.clone()])).unwrap()
}

pub fn non_cutset(net: &Network, cutset: &LoopCutset) -> Vec<NodeId> {
    net.node_ids().filter(|&n| !cutset.contains(n)).collect()
}
