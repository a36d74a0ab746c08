use adinfer::network::random::sample_assignment;
use adinfer::{Evidence, NodeId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::spec::SyntheticNetwork;

pub const MIN_CASE_FEATURES: usize = 3;
pub const MAX_CASE_FEATURES: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseSample {
    pub id: usize,
    pub evidence: Evidence,
}

impl CaseSample {
    pub fn feature_count(&self) -> usize {
        self.evidence.len()
    }
}

/// Draws `n` cases. Each observes between 3 and 10 distinct features
/// (fewer only if the network has fewer), with values from one forward
/// sample of the network so no case is impossible.
pub fn sample_cases(bench: &SyntheticNetwork, n: usize, seed: u64) -> Vec<CaseSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = bench.features();
    (0..n)
        .map(|id| {
            let k = rng.gen_range(MIN_CASE_FEATURES..=MAX_CASE_FEATURES).min(features.len());
            let world = sample_assignment(&*bench.network, &mut rng);
            let evidence = features
                .choose_multiple(&mut rng, k)
                .map(|&f| (f, world[f.0]))
                .collect();
            CaseSample { id, evidence }
        })
        .collect()
}

/// One observed feature in every portion, so every component of every
/// cutset instance has to be propagated.
pub fn worst_case(bench: &SyntheticNetwork, id: usize, seed: u64) -> CaseSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let world = sample_assignment(&*bench.network, &mut rng);
    let evidence = bench
        .portions
        .iter()
        .map(|p| {
            let f: NodeId = *p.features.choose(&mut rng).expect("portions are nonempty");
            (f, world[f.0])
        })
        .collect();
    CaseSample { id, evidence }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{generate, SyntheticSpec};
    use adinfer::network::evidence_likelihood_oracle;

    #[test]
    fn twenty_cases_in_range_and_reproducible() {
        let bench = generate(&SyntheticSpec::default()).unwrap();
        let cases = sample_cases(&bench, 20, 11);
        assert_eq!(cases.len(), 20);
        for c in &cases {
            assert!((MIN_CASE_FEATURES..=MAX_CASE_FEATURES).contains(&c.feature_count()));
            assert!(c.evidence.nodes().all(|n| n != bench.disease));
        }
        assert_eq!(cases, sample_cases(&bench, 20, 11));
        assert_ne!(cases, sample_cases(&bench, 20, 12));
    }

    #[test]
    fn worst_case_touches_every_portion() {
        let bench = generate(&SyntheticSpec::default()).unwrap();
        let case = worst_case(&bench, 0, 5);
        let touched = bench.portions_touched(case.evidence.nodes());
        assert_eq!(touched, (0..bench.portions.len()).collect::<Vec<_>>());
    }

    #[test]
    fn sampled_evidence_is_possible() {
        // Small enough for the oracle: D plus three features.
        let spec = SyntheticSpec {
            disease_cardinality: 3,
            portions: vec![crate::spec::PortionSpec {
                features: 3,
                pattern: crate::spec::EdgePattern::Chain,
                repeat: 1,
                values: None,
            }],
            independent_features: 1,
            ..SyntheticSpec::default()
        };
        let bench = generate(&spec).unwrap();
        for c in sample_cases(&bench, 10, 3) {
            assert!(evidence_likelihood_oracle(&*bench.network, &c.evidence).unwrap() > 0.0);
        }
    }
}
