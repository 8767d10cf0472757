//! Simulation and analysis toolkit for quantum-walk-based quantum key distribution.
//!
//! * [`walk`]: exact state-vector evolution of coined walks on a cycle, with a
//!   momentum-space oracle.
//! * [`security`]: overlap constant `c`, generalized Pauli channel statistics,
//!   conditional entropies and the resulting key rate / noise tolerance.
//! * [`sweep`]: parallel grid search over walk parameters.
//! * [`protocol`]: discrete-event simulation of the two-way, one-way and
//!   semi-quantum protocols, including eavesdropper models.
//! * [`reproduce`]: recomputation of reference tables and figures.
//! * [`cli`]: the `qwqkd` command-line front end.

pub mod cli;
pub mod error;
pub mod protocol;
pub mod reproduce;
pub mod security;
pub mod sweep;
pub mod walk;

pub use error::{Error, Result};

pub use num_complex::Complex64;

/// Dense complex matrix used for walk-basis and channel operators.
pub type ComplexMatrix = nalgebra::DMatrix<Complex64>;

/// Seed used whenever the caller does not supply one.
pub const DEFAULT_SEED: u64 = 20_180_507;

/// Tool version recorded in exported documents.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
