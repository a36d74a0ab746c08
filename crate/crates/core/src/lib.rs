//! Exact inference in discrete belief networks.
//!
//! Three engines share one set of building blocks:
//!
//! * clique-tree propagation ([`ctp`]) over a clique forest, propagating only
//!   the components that received new evidence;
//! * aggregation after decomposition ([`ad`]): condition on a loop cutset,
//!   keep one set of clique potentials per cutset instance over a shared
//!   forest structure, and track instance weights `w_i ∝ P(E | c_i) w_i`;
//! * bounded conditioning ([`bounded`]): propagate only high-weight
//!   instances and report interval bounds on every instance posterior.
//!
//! A brute-force enumeration oracle ([`network::enumerate_posterior`]) backs
//! the test suites.
//!
//! Everything numeric is generic over [`Probability`] (`f32` or `f64`); the
//! aliases below fix the common `f64` case.

pub mod ad;
pub mod bounded;
pub mod ctp;
pub mod error;
pub mod network;
pub mod potential;
pub mod scalar;

pub use ad::{
    decompose, select_cutset, CutsetEnsemble, CutsetInstance, CutsetStrategy, ConditionedNetwork, LikelihoodRecord,
    LoopCutset, PropagationSummary,
};
pub use bounded::{BoundedConditioner, InstanceBounds, IntervalPosterior, RetentionPolicy};
pub use ctp::{forest_likelihood, CliqueForest, ComponentId, FactorSet, ForestStructure, PropagationReport};
pub use error::{InferenceError, Result};
pub use network::{load_evidence, load_network, BeliefNetwork, Evidence, NetworkBuilder, NodeDef, NodeId};
pub use potential::PotentialTable;
pub use scalar::Probability;

pub type Network = BeliefNetwork<f64>;
pub type Forest = CliqueForest<f64>;
pub type Ensemble = CutsetEnsemble<f64>;
pub type Bounded = BoundedConditioner<f64>;
pub type Intervals = IntervalPosterior<f64>;
pub type Report = PropagationReport<f64>;
