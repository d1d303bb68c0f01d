//! Simulation and verification tools for random dense countable sets.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod brownian;
pub mod config;
pub mod coupling;
pub mod densities;
pub mod duality;
pub mod enumeration;
pub mod error;
pub mod joining;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod suites;

pub use error::{Error, Result};
