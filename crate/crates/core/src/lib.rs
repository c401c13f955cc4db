//! Non-backtracking spectral toolkit for finite graphs.
//!
//! Builds the vertex and edge operators of a finite graph, relates the
//! spectrum of the turn sum to vertex eigenproblems, models the transfer
//! operator on locally constant path-space functions, constructs dual
//! eigen-measures on path space, and lifts everything to a truncated
//! universal cover where boundary measures and Poisson transforms live.

pub mod cover;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod measures;
pub mod operators;
pub mod path_space;
pub mod ser;
pub mod spectral;
pub mod suites;

pub use error::{Error, Result};
pub use graph::{corpus, enumerate_codes, load_graph, parse_edge_list, Code, DistrictTree, Graph};
pub use linalg::C64;
