//! Clique-tree propagation over a clique forest.
//!
//! Construction runs moralize → triangulate → build_forest; the resulting
//! [`ForestStructure`] is immutable and shared, while [`CliqueForest`] owns the
//! potentials and is single-writer. Only components holding new evidence are
//! propagated.

mod forest;
mod graph;
mod structure;

pub use forest::{
    forest_likelihood, initialize_potentials, CliqueForest, ComponentPass, FactorSet, PropagationReport,
};
pub(crate) use forest::ForestLanes;
pub use graph::{moralize, triangulate, ChordalGraph, MoralGraph, Triangulation, UndirectedGraph};
pub use structure::{build_forest, CliqueDef, Component, ComponentId, ForestStructure, ScheduleStep, TreeEdge};
