//! Simulation core for thermalization and deep-thermalization studies on
//! small 2D XY qubit lattices.

pub mod error;
pub mod evolution;
pub mod exec;
pub mod lattice;
pub mod linalg;
pub mod noise;

pub use error::{Error, Result};
pub use exec::Execution;
pub mod measurement;
pub mod ensemble;
pub mod stats;
pub mod pipeline;
pub mod acceptance;
