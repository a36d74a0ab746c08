//! Aggregation after decomposition: cutset conditioning with clique-tree
//! propagation inside each conditioned instance.

mod cutset;
mod ensemble;

pub use cutset::{
    conditioned_component_count, decompose, select_cutset, ConditionedNetwork, CutsetStrategy, LoopCutset,
};
pub use ensemble::{
    init_ensemble, CutsetEnsemble, CutsetInstance, LikelihoodRecord, PropagationScope, PropagationSummary,
};
