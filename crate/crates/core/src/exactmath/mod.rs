//! Exact coefficient arithmetic: arbitrary-precision rationals and
//! polynomials in the indeterminate `q`.
//!
//! Every moment this crate computes is a [`QPoly`]; numeric values of `q`
//! enter only through [`QPoly::eval`] or the Fock oracle.

mod poly;
mod rational;

pub use poly::QPoly;
pub use rational::QRational;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExactError {
    #[error("denominator is zero")]
    ZeroDenominator,
    #[error("invalid rational literal `{0}`")]
    InvalidRational(String),
    #[error("invalid polynomial `{0}`: {1}")]
    InvalidPoly(String, String),
}
