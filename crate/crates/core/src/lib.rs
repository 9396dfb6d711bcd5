//! Moran process on graphs: exact potentials and drift, suppressor families,
//! exact absorption analysis for small graphs, and a fast simulation engine
//! with a fixation-probability estimator built on it.

pub mod engine;
pub mod estimator;
pub mod exact;
pub mod families;
pub mod graph;
pub mod potential;
pub mod rational;

pub use graph::{Graph, GraphError, MutantSet};
