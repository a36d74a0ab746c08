use std::sync::Arc;

use adinfer::ad::{decompose, select_cutset, CutsetStrategy};
use adinfer::network::random::random_distribution;
use adinfer::network::NodeDef;
use adinfer::{Network, NetworkBuilder, NodeId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::BenchError;

pub const DISEASE_ID: &str = "D";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgePattern {
    /// A single feature with no siblings wired to it.
    Isolated,
    /// `f1 → f2 → … → fn`.
    Chain,
    /// Binary-heap shaped: `f(j)` has parent `f((j-1)/2)`.
    Tree,
}

/// Inclusive range of feature cardinalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueRange {
    pub min: usize,
    pub max: usize,
}

impl Default for ValueRange {
    fn default() -> Self {
        ValueRange { min: 2, max: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortionSpec {
    pub features: usize,
    pub pattern: EdgePattern,
    /// How many identical portions this descriptor stands for.
    #[serde(default = "one")]
    pub repeat: usize,
    /// Overrides the spec-wide cardinality range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<ValueRange>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    #[serde(default = "default_disease_cardinality")]
    pub disease_cardinality: usize,
    pub portions: Vec<PortionSpec>,
    /// Features with no disease parent.
    #[serde(default = "default_independent")]
    pub independent_features: usize,
    #[serde(default)]
    pub feature_values: ValueRange,
    #[serde(default)]
    pub seed: u64,
}

fn default_disease_cardinality() -> usize {
    63
}

fn default_independent() -> usize {
    2
}

impl Default for SyntheticSpec {
    /// One 12-feature chain, 20 single-feature portions and 2 features that
    /// do not depend on the disease.
    fn default() -> Self {
        SyntheticSpec {
            disease_cardinality: 63,
            portions: vec![
                PortionSpec {
                    features: 12,
                    pattern: EdgePattern::Chain,
                    repeat: 1,
                    values: None,
                },
                PortionSpec {
                    features: 1,
                    pattern: EdgePattern::Isolated,
                    repeat: 20,
                    values: None,
                },
            ],
            independent_features: 2,
            feature_values: ValueRange::default(),
            seed: 1989,
        }
    }
}

impl SyntheticSpec {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        serde_json::from_str(text).map_err(|e| BenchError::Spec(e.to_string()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.disease_cardinality < 2 {
            return Err(BenchError::Spec("disease needs at least two values".into()));
        }
        if self.portions.iter().all(|p| p.repeat == 0) {
            return Err(BenchError::Spec("at least one portion is required".into()));
        }
        check_range(&self.feature_values)?;
        for (i, p) in self.portions.iter().enumerate() {
            if p.features == 0 {
                return Err(BenchError::Spec(format!("portion {i} has no features")));
            }
            if p.pattern == EdgePattern::Isolated && p.features != 1 {
                return Err(BenchError::Spec(format!(
                    "portion {i}: an isolated portion holds exactly one feature; use repeat for more"
                )));
            }
            if let Some(r) = &p.values {
                check_range(r)?;
            }
        }
        Ok(())
    }
}

fn check_range(r: &ValueRange) -> Result<(), BenchError> {
    if r.min < 2 || r.max < r.min {
        return Err(BenchError::Spec(format!("bad cardinality range {}..={}", r.min, r.max)));
    }
    Ok(())
}

/// Features that form one connected piece once the disease is fixed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Portion {
    pub label: String,
    pub features: Vec<NodeId>,
    /// True for the disease-independent features.
    pub independent: bool,
}

#[derive(Debug, Clone)]
pub struct SyntheticNetwork {
    pub spec: SyntheticSpec,
    pub network: Arc<Network>,
    pub disease: NodeId,
    pub portions: Vec<Portion>,
    /// Index into `portions` of the portion with the largest conditioned
    /// clique state space.
    pub largest_portion: usize,
    portion_of: Vec<Option<usize>>,
}

impl SyntheticNetwork {
    pub fn features(&self) -> Vec<NodeId> {
        self.portions.iter().flat_map(|p| p.features.iter().copied()).collect()
    }

    pub fn portion_of(&self, node: NodeId) -> Option<usize> {
        self.portion_of.get(node.0).copied().flatten()
    }

    /// Sorted, deduplicated portion indices holding any of `nodes`.
    pub fn portions_touched(&self, nodes: impl IntoIterator<Item = NodeId>) -> Vec<usize> {
        let mut out: Vec<usize> = nodes.into_iter().filter_map(|n| self.portion_of(n)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Builds the network described by `spec`. Same spec, same network.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticNetwork, BenchError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut builder = NetworkBuilder::new();
    let dc = spec.disease_cardinality;
    let width = (dc - 1).to_string().len();
    let disease_values: Vec<String> = (0..dc).map(|i| format!("dx{i:0width$}")).collect();
    builder.push(
        NodeDef {
            id: DISEASE_ID.into(),
            label: "disease".into(),
            values: disease_values,
        },
        vec![],
        random_distribution(&mut rng, dc, 0.0),
    );

    let mut portions = Vec::new();
    let mut next_id = 1;
    for p in &spec.portions {
        let range = p.values.unwrap_or(spec.feature_values);
        for _ in 0..p.repeat {
            let index = portions.len();
            let mut features = Vec::with_capacity(p.features);
            let mut cards = Vec::with_capacity(p.features);
            for j in 0..p.features {
                let card = rng.gen_range(range.min..=range.max);
                let intra = match p.pattern {
                    EdgePattern::Isolated => None,
                    EdgePattern::Chain => j.checked_sub(1),
                    EdgePattern::Tree => (j > 0).then(|| (j - 1) / 2),
                };
                let mut parents = vec![DISEASE_ID.to_string()];
                let mut rows = dc;
                if let Some(k) = intra {
                    parents.push(feature_id(index, k));
                    rows *= cards[k];
                }
                let mut cpt = Vec::with_capacity(rows * card);
                for _ in 0..rows {
                    cpt.extend(random_distribution(&mut rng, card, 0.0));
                }
                builder.push(feature_def(feature_id(index, j), card), parents, cpt);
                cards.push(card);
                features.push(NodeId(next_id));
                next_id += 1;
            }
            portions.push(Portion {
                label: format!("p{index}"),
                features,
                independent: false,
            });
        }
    }
    for j in 0..spec.independent_features {
        let card = rng.gen_range(spec.feature_values.min..=spec.feature_values.max);
        let id = format!("x{j}");
        builder.push(feature_def(id.clone(), card), vec![], random_distribution(&mut rng, card, 0.0));
        portions.push(Portion {
            label: id,
            features: vec![NodeId(next_id)],
            independent: true,
        });
        next_id += 1;
    }

    let network: Network = builder.build()?;
    let mut portion_of = vec![None; network.node_count()];
    for (i, p) in portions.iter().enumerate() {
        for f in &p.features {
            portion_of[f.0] = Some(i);
        }
    }
    let largest_portion = find_largest(&network, &portion_of)?;
    Ok(SyntheticNetwork {
        spec: spec.clone(),
        network: Arc::new(network),
        disease: NodeId(0),
        portions,
        largest_portion,
        portion_of,
    })
}

fn feature_id(portion: usize, j: usize) -> String {
    format!("p{portion}_f{j}")
}

fn feature_def(id: String, card: usize) -> NodeDef {
    NodeDef {
        label: id.clone(),
        id,
        values: (0..card).map(|v| format!("v{v}")).collect(),
    }
}

fn find_largest(net: &Network, portion_of: &[Option<usize>]) -> Result<usize, BenchError> {
    let cutset = select_cutset(net, &CutsetStrategy::Explicit(vec![DISEASE_ID.into()]))?;
    let conditioned = decompose(net, &cutset, &[0])?;
    let structure = conditioned.factor_set().structure()?;
    let largest = structure
        .largest_component()
        .ok_or_else(|| BenchError::Spec("network has no features".into()))?;
    let node = structure.component(largest).nodes[0];
    portion_of[node.0].ok_or_else(|| BenchError::Spec("largest component holds no feature".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn isolated(n: usize) -> SyntheticSpec {
        SyntheticSpec {
            portions: vec![PortionSpec {
                features: 1,
                pattern: EdgePattern::Isolated,
                repeat: n,
                values: None,
            }],
            independent_features: 0,
            disease_cardinality: 4,
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn three_isolated_portions_give_three_singletons() {
        let bench = generate(&isolated(3)).unwrap();
        let cutset = select_cutset(&*bench.network, &CutsetStrategy::Explicit(vec!["D".into()])).unwrap();
        let structure = decompose(&bench.network, &cutset, &[0]).unwrap().factor_set().structure().unwrap();
        assert_eq!(structure.components().len(), 3);
        assert!(structure.components().iter().all(|c| c.nodes.len() == 1));
    }

    #[test]
    fn default_largest_portion_is_the_chain() {
        let bench = generate(&SyntheticSpec::default()).unwrap();
        assert_eq!(bench.portions.len(), 23);
        let largest = &bench.portions[bench.largest_portion];
        assert_eq!(largest.features.len(), 12);
        assert_eq!(bench.features().len(), 34);
        let cutset = select_cutset(&*bench.network, &CutsetStrategy::Explicit(vec!["D".into()])).unwrap();
        let structure = decompose(&bench.network, &cutset, &[0]).unwrap().factor_set().structure().unwrap();
        let comp = structure.component(structure.largest_component().unwrap());
        assert_eq!(comp.nodes, largest.features);
        // One component per portion, independent features included.
        assert_eq!(structure.components().len(), bench.portions.len());
    }

    #[test]
    fn disease_parents_every_dependent_feature() {
        let bench = generate(&SyntheticSpec::default()).unwrap();
        let net = &bench.network;
        for p in &bench.portions {
            for &f in &p.features {
                assert_eq!(net.parents(f).contains(&bench.disease), !p.independent);
                for q in net.parents(f) {
                    assert!(*q == bench.disease || bench.portion_of(*q) == bench.portion_of(f));
                }
            }
        }
    }

    #[test]
    fn same_seed_same_document() {
        let a = generate(&SyntheticSpec::default()).unwrap();
        let b = generate(&SyntheticSpec::default()).unwrap();
        assert_eq!(a.network.to_document().to_json_pretty(), b.network.to_document().to_json_pretty());
        let other = generate(&SyntheticSpec { seed: 7, ..SyntheticSpec::default() }).unwrap();
        assert_ne!(a.network.to_document().to_json_pretty(), other.network.to_document().to_json_pretty());
    }

    #[test]
    fn tree_portions_wire_heap_parents() {
        let spec = SyntheticSpec {
            portions: vec![PortionSpec {
                features: 5,
                pattern: EdgePattern::Tree,
                repeat: 1,
                values: Some(ValueRange { min: 2, max: 3 }),
            }],
            independent_features: 0,
            ..SyntheticSpec::default()
        };
        let bench = generate(&spec).unwrap();
        let net = &bench.network;
        let f = &bench.portions[0].features;
        assert_eq!(net.parents(f[4]), &[bench.disease, f[1]]);
        assert_eq!(net.parents(f[2]), &[bench.disease, f[0]]);
        assert!(f.iter().all(|&n| (2..=3).contains(&net.cardinality(n))));
    }

    #[test]
    fn spec_json_round_trip_and_defaults() {
        let spec = SyntheticSpec::default();
        assert_eq!(SyntheticSpec::from_json(&spec.to_json_pretty()).unwrap(), spec);
        let sparse = SyntheticSpec::from_json(r#"{"portions":[{"features":1,"pattern":"isolated"}]}"#).unwrap();
        assert_eq!(sparse.disease_cardinality, 63);
        assert_eq!(sparse.portions[0].repeat, 1);
        assert_eq!(sparse.independent_features, 2);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = isolated(2);
        spec.portions[0].features = 3;
        assert!(matches!(generate(&spec), Err(BenchError::Spec(_))));
        let empty = SyntheticSpec { portions: vec![], ..SyntheticSpec::default() };
        assert!(generate(&empty).is_err());
        let bad_range = SyntheticSpec {
            feature_values: ValueRange { min: 1, max: 4 },
            ..SyntheticSpec::default()
        };
        assert!(generate(&bad_range).is_err());
    }
}
