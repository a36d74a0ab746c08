//! Synthetic disease/feature networks and a CTP-vs-AD timing suite.
//!
//! A [`SyntheticSpec`] describes one disease node with many children grouped
//! into *portions*: features that stay connected to each other once the
//! disease is instantiated. [`generate`] builds the network,
//! [`sample_cases`] draws evidence sets, and [`run_suite`] times both
//! engines on each case after checking they agree.

mod cases;
mod error;
mod report;
mod spec;
mod suite;

pub use cases::{sample_cases, worst_case, CaseSample, MAX_CASE_FEATURES, MIN_CASE_FEATURES};
pub use error::BenchError;
pub use report::{export_scatter, scatter_without_timing, BenchReport, CaseResult, ClusterSummary};
pub use spec::{generate, EdgePattern, Portion, PortionSpec, SyntheticNetwork, SyntheticSpec, ValueRange};
pub use suite::{run_suite, AdEngine, CtpEngine, SuiteConfig, GATE_TOLERANCE};
