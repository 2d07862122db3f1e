//! High-girth qudit QAOA evaluation and classical Max-k-Cut baselines.

pub mod graph;
pub mod heuristic;
pub mod highgirth;
pub mod maxkcut;
pub mod optimizer;
pub mod sdp;
pub mod statevector;
