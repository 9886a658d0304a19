//! Finite metric-graph models for auditing relative hyperbolicity: Cayley
//! ball generation, peripheral families, transient decompositions,
//! horoball and coned-off constructions, divergence and tree-graded
//! approximation.

pub mod error;
pub mod graph;
pub mod bowditch;
pub mod cayley;
pub mod coned;
pub mod divergence;
pub mod metric;
pub mod peripherals;
pub mod report;
pub mod sampling;
pub mod shortest;
pub mod transient;
pub mod tree_approx;

pub use error::GraphError;
pub use graph::{GraphBuilder, MetricGraph, PathInSpace, QuasiConstants, Vertex, VertexSet, EPS};
pub use report::{Best, ConstantsReport, Real, Witness};
pub use sampling::Mode;
