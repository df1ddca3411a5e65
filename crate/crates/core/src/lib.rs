//! Distributed dual decomposition for separable convex programs with a
//! coupling inequality and a coupling linear matrix inequality.
//!
//! The crate provides the problem model, the centralized projected dual
//! subgradient method, the consensus-based variant that runs on a network
//! of agents, the bound constants for both, and reference solvers used to
//! obtain `f*`.

pub mod bounds;
pub mod central;
pub mod cobadd;
pub mod consensus;
pub mod error;
pub mod matrix;
pub mod oracles;
pub mod problem;
pub mod spectral;
pub mod trace;

pub use error::{Error, Result};
pub use matrix::SymMatrix;
