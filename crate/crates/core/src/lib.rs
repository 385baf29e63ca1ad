//! Provably optimal depth-bounded classification trees.
//!
//! Training data is binarized and collapsed into a weighted set of unique
//! instances, a Benders master problem is built for the requested
//! confusion-matrix objective, and a native branch-and-cut loop solves it
//! to proven optimality. An exhaustive enumerator over small trees serves
//! as ground truth for the whole pipeline.

pub mod dataset;
pub mod engine;
pub mod error;
pub mod exec;
pub mod formulations;
pub mod heuristics;
pub mod metrics;
pub mod milp;
pub mod oracle;
pub mod tree;

pub use dataset::{BinRules, BinarizedDataset, RawDataset, UniqueDataset};
pub use engine::{solve, SolveConfig, SolveResult};
pub use error::{DataError, Error, ModelError, SolveError, TreeError};
pub use exec::Exec;
pub use metrics::{ConfusionCounts, MetricSpec};
pub use tree::{ClassTree, NodeRole, TreeTopology};
