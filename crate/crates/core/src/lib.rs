//! Multi-perspective analysis of hierarchical citation networks.
//!
//! A corpus is a [`BaseNetwork`]: a judicial forest (courts, panels,
//! decisions, paragraphs) and a legislative forest (statutes, sections and
//! up to three sub-levels) joined by paragraph → legislative-node references.
//! From it the crate derives bipartite networks at any pair of granularity
//! levels, one-mode projections under several co-reference weighting
//! functions, and node metrics over them.
//!
//! All numeric routines are generic over [`Scalar`]. [`Mass`] (an exact
//! big rational) is the default; the `*F64` aliases run the same pipeline
//! in floating point.

pub mod corpus;
pub mod counting;
pub mod error;
pub mod fixtures;
pub mod ingest;
pub mod metrics;
pub mod perspective;
pub mod projection;
pub mod report;
pub mod scalar;

pub use corpus::{validate, BaseNetwork, Branch, LevelTag, Node, NodeId, RefEdge, ValidationReport};
pub use counting::{aggregate_at_level, broadcast_to_leaves, roll_up_source, SplitRule};
pub use error::{Error, Result};
pub use perspective::{derive, enumerate_grid, NodeFilter, Perspective, Side};
pub use projection::{project, WeightingMode, WeightingSpec};
pub use scalar::Scalar;

/// Exact reference mass.
pub type Mass = num_rational::BigRational;

pub type LeafMassTable = counting::LeafMassTable<Mass>;
pub type MassTable = counting::MassTable<Mass>;
pub type BipartiteNetwork = perspective::BipartiteNetwork<Mass>;
pub type ProjectedGraph = projection::ProjectedGraph<Mass>;
pub type StrengthMatrix = projection::StrengthMatrix<Mass>;
pub type RankTable = metrics::RankTable<Mass>;

pub type LeafMassTableF64 = counting::LeafMassTable<f64>;
pub type MassTableF64 = counting::MassTable<f64>;
pub type BipartiteNetworkF64 = perspective::BipartiteNetwork<f64>;
pub type ProjectedGraphF64 = projection::ProjectedGraph<f64>;
pub type StrengthMatrixF64 = projection::StrengthMatrix<f64>;
pub type RankTableF64 = metrics::RankTable<f64>;
