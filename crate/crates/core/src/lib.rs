//! Random interlacements in finite windows, vacant-set percolation
//! estimators, smoothed percolation profiles and a constrained
//! Dirichlet-energy solver.

pub mod cli;
pub mod error;
pub mod lattice;
pub mod rng;
pub mod sim;
pub mod solver;
pub mod stats;
pub mod theta;

pub use error::{Error, Result};
