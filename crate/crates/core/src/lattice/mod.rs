//! Weighted graphs, unitary edge transports, Hermitian potentials and the
//! assembled covariant Schrödinger operator.

mod bundle;
mod graph;
mod io;
mod operator;
mod potential;

pub use bundle::{BundleData, GaugeField};
pub use graph::{build_grid_graph, Edge, WeightedGraph};
pub use io::{ComplexRows, EdgeRecord, LatticeDocument, PotentialRecord, PotentialValue, VertexRecord};
pub use operator::{SchrodingerOperator, EIGEN_LIMIT};
pub use potential::PotentialField;
