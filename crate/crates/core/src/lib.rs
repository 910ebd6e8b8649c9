//! Exact mixed moments of (noncommutative) random vectors from q-commutator
//! data.
//!
//! A model is given by the scalars `c(i,j)` in `[a-(i); a+(j)]_q = c(i,j) I`,
//! the first moments `E[X_i]`, and an optional table of preservation
//! commutators `[a-(i); a0(j)]_q`. From that data the crate computes any
//! mixed moment `E[X_sigma(1) ... X_sigma(k)]` as an exact polynomial in the
//! deformation parameter `q`, four independent ways:
//!
//! * [`engine`] - normal ordering by q-commutator rewriting, the generic
//!   route that also handles nonzero means and preservation commutators;
//! * [`diagrams::q_wick_moment`] - the crossing-weighted sum over all
//!   pairings of the positions (centered scalar-commutator models);
//! * [`diagrams::scalar_recursion_moment`] - a pair-removal recursion,
//!   independent of both routes above;
//! * [`fockoracle`] - a floating-point realization on a truncated
//!   q-deformed Fock space, for numeric cross-checks at concrete `q`.
//!
//! All symbolic arithmetic is exact; floats appear only in the Fock oracle.

pub mod algebra;
pub mod diagrams;
pub mod engine;
pub mod exactmath;
pub mod fockoracle;

pub use algebra::{ModelDocument, ModelSpec, MomentQuery, OpExpr, OpSymbol, OpWord, QPoint};
pub use exactmath::{QPoly, QRational};
