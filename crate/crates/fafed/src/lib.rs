//! Deterministic simulator for cross-silo federated optimization.
//!
//! Implements the shared-adaptive-rate variance-reduced method (FAFED)
//! alongside naive adaptive FedAvg, FedAvg, and FedAdam on synthetic
//! problem families, with a verification suite over recorded runs.

pub mod audit;
pub mod cli;
pub mod engine;
pub mod error;
pub mod io;
pub mod metrics;
pub mod optim;
pub mod problems;
pub mod rng;
pub mod vecmath;

pub use error::{Result, SimError};
