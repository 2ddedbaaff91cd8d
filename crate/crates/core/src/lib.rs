//! Expected-utility portfolios and marginal utility prices under Wasserstein
//! model uncertainty: baseline solver, first-order sensitivities in the ball
//! radius, and brute-force robust solvers that check them.

pub mod baseline;
pub mod error;
pub mod fixtures;
pub mod measures;
pub mod optimize;
pub mod payoff;
pub mod quadrature;
pub mod robust;
pub mod sensitivity;
pub mod utility;

pub use error::{Error, ErrorKind, Result};

/// Crate version, recorded in output provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
