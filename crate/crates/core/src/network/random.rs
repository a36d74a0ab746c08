//! Seeded random networks and forward sampling, used by property tests and
//! the benchmark case sampler.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{BeliefNetwork, Evidence, NetworkBuilder, NodeDef, NodeId};
use crate::scalar::Probability;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomNetworkConfig {
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub max_values: usize,
    pub max_parents: usize,
    /// Chance that a table entry is forced to exactly zero.
    pub zero_entry_probability: f64,
    /// Declare nodes in a shuffled order instead of a topological one.
    pub shuffle_declaration: bool,
}

impl Default for RandomNetworkConfig {
    fn default() -> Self {
        Self {
            min_nodes: 1,
            max_nodes: 10,
            max_values: 4,
            max_parents: 3,
            zero_entry_probability: 0.0,
            shuffle_declaration: false,
        }
    }
}

/// Draws a random distribution over `len` values, renormalized in `f64`.
pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, len: usize, zero_probability: f64) -> Vec<f64> {
    loop {
        let mut row: Vec<f64> = (0..len)
            .map(|_| {
                if zero_probability > 0.0 && rng.gen_bool(zero_probability) {
                    0.0
                } else {
                    rng.gen_range(0.05..1.0)
                }
            })
            .collect();
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            row.iter_mut().for_each(|v| *v /= sum);
            return row;
        }
    }
}

pub fn random_network<R: Rng + ?Sized>(rng: &mut R, config: &RandomNetworkConfig) -> BeliefNetwork<f64> {
    let n = rng.gen_range(config.min_nodes.max(1)..=config.max_nodes.max(config.min_nodes.max(1)));
    let cards: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=config.max_values.max(2))).collect();
    let mut parents: Vec<Vec<usize>> = Vec::with_capacity(n);
    for i in 0..n {
        let k = rng.gen_range(0..=config.max_parents.min(i));
        let mut pool: Vec<usize> = (0..i).collect();
        pool.shuffle(rng);
        let mut chosen: Vec<usize> = pool.into_iter().take(k).collect();
        chosen.sort_unstable();
        parents.push(chosen);
    }

    let mut declaration: Vec<usize> = (0..n).collect();
    if config.shuffle_declaration {
        declaration.shuffle(rng);
    }

    let mut tables = Vec::with_capacity(n);
    for i in 0..n {
        let rows: usize = parents[i].iter().map(|&p| cards[p]).product();
        let mut cpt = Vec::with_capacity(rows * cards[i]);
        for _ in 0..rows {
            cpt.extend(random_distribution(rng, cards[i], config.zero_entry_probability));
        }
        tables.push(cpt);
    }

    let mut builder = NetworkBuilder::new();
    for &i in &declaration {
        builder.push(
            NodeDef {
                id: format!("n{i}"),
                label: format!("node {i}"),
                values: (0..cards[i]).map(|v| format!("v{v}")).collect(),
            },
            parents[i].iter().map(|p| format!("n{p}")).collect(),
            tables[i].clone(),
        );
    }
    builder.build().expect("random networks are valid by construction")
}

/// Ancestral sample of a full assignment.
pub fn sample_assignment<T: Probability, R: Rng + ?Sized>(net: &BeliefNetwork<T>, rng: &mut R) -> Vec<usize> {
    let mut assignment = vec![0usize; net.node_count()];
    for &node in net.topological_order() {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let card = net.cardinality(node);
        let mut chosen = card - 1;
        for v in 0..card {
            let p = net.conditional(node, v, &assignment).as_f64();
            acc += p;
            if u < acc && p > 0.0 {
                chosen = v;
                break;
            }
        }
        // Guard against rounding landing on a zero-probability tail value.
        while net.conditional(node, chosen, &assignment) == T::zero() && chosen > 0 {
            chosen -= 1;
        }
        assignment[node.0] = chosen;
    }
    assignment
}

/// Evidence on up to `max_observed` random nodes drawn from `candidates`,
/// with values taken from a forward sample so the evidence is possible.
pub fn random_evidence<T: Probability, R: Rng + ?Sized>(
    net: &BeliefNetwork<T>,
    rng: &mut R,
    candidates: &[NodeId],
    max_observed: usize,
) -> Evidence {
    let sample = sample_assignment(net, rng);
    let k = rng.gen_range(0..=max_observed.min(candidates.len()));
    candidates
        .choose_multiple(rng, k)
        .map(|&node| (node, sample[node.0]))
        .collect()
}
