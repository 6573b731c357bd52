//! Engineered bilinear and quadratic Hamiltonians for a single driven
//! two-level atom coupled to one or two cavity modes.
//!
//! The crate builds the full atom-cavity model in several frames, the
//! closed-form effective couplings (two-mode down- and up-conversion,
//! single-mode squeezing, anti-Jaynes-Cummings), propagates pure and
//! open-system dynamics in truncated Fock space, and reads out quadrature
//! squeezing. The `cqed` binary wraps the scenario layer as a CLI.

pub mod dynamics;
pub mod effective;
pub mod error;
pub mod fock_algebra;
pub mod model;
pub mod observables;
pub mod scenario;
mod sparse;

pub use error::{Error, Margin, Result};
