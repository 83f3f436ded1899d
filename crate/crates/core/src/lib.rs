//! Surface-code decoder benchmarking.
//!
//! Rotated surface codes over GF(2), Pauli and native-GKP noise, four decoders
//! (MWPM, Union-Find, belief propagation, weight-table guided MWPM), the
//! binomial estimators used to summarise sweeps, and a deterministic parallel
//! sweep harness.

pub mod bits;
pub mod decoders;
pub mod error;
pub mod harness;
pub mod io;
pub mod lattice;
pub mod noise;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
