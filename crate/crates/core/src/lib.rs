//! Broadband photon-counting OTDR simulation and analysis, connector
//! reflectance modelling, and Trojan-horse information-leakage bounds for
//! fiber QKD setups.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod connector;
pub mod error;
pub mod fidelity;
pub mod security;
pub mod simulator;
pub mod spectral;
pub mod trace;

pub use error::{Error, Result};
