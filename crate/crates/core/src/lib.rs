//! Coded caching for private linear function retrieval over prime fields.
//!
//! Users request `L` linear combinations `D_k w` of a library of `F` symbols
//! over `GF(q)`. The crate provides exact load formulas ([`analysis`]), the
//! constructive placement/delivery/decoding schemes ([`schemes`]) and
//! independent checkers ([`verify`]).

pub mod analysis;
pub mod error;
pub mod field;
pub mod model;
pub mod schemes;
pub mod verify;

pub use error::{Error, Result};
