//! Quartic D4 fields ordered by the Artin conductor of their two-dimensional
//! representation.
//!
//! The crate enumerates quadratic extensions of quadratic fields through
//! Kummer generators, counts D4 fields by conductor both by brute force and
//! through a hyperbola-method identity built on the flipped field, computes
//! the 2-adic and odd local masses, and evaluates the asymptotic constants.

pub mod arith;
pub mod census;
pub mod cli;
pub mod localalg;
pub mod quadfield;
pub mod relext;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate extension: {0}")]
    Degenerate(String),
    #[error("p-adic precision exhausted: {0}")]
    Precision(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),
    #[error("spec file error: {0}")]
    Schema(String),
}
