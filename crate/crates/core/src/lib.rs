//! Analytic and Monte Carlo models for quantum repeater chains built from
//! NV⁻ centres in optical cavities.
//!
//! The crate is split by subsystem:
//!
//! - [`levels`]: NV⁻ ground-manifold Hamiltonian and its level structure.
//! - [`link`]: per-link heralding probability, attempt budgets and rates.
//! - [`chain`]: end-to-end rate, fidelity and secret-key rate of an N-link chain.
//! - [`multiplex`]: spatially multiplexed and hyper-encoded variants.
//! - [`ecc`]: error-corrected repeater economics.
//! - [`mc`]: discrete-event Monte Carlo of the repeat-until-success protocol.

pub mod chain;
pub mod ecc;
pub mod error;
pub mod levels;
pub mod link;
pub mod mc;
pub mod multiplex;

pub use error::{ModelError, Result};
