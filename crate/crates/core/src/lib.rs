//! Online combinatorial assignment over independence systems.
//!
//! Agents arrive one at a time with a weight function over the ground set of an
//! independence system, and each must be irrevocably given one element (or
//! nothing) so that the chosen elements stay distinct and independent. The crate
//! provides certifiers and certificate samplers, the three random-order online
//! templates driven by them, exact offline oracles, and the tooling to measure
//! competitive ratios.

pub mod bounds;
pub mod certifiers;
pub mod driver;
pub mod error;
pub mod hardness;
pub mod harness;
pub mod instance;
pub mod matroids;
pub mod model;
pub mod offline;
pub mod online;
pub mod samplers;
pub mod scalar;

pub use error::{Error, Result};
