//! Analysis toolkit for multiple-size divide-and-conquer recurrences
//!
//! ```text
//! T(n) = c·n^alpha·log^beta(n) + sum_{i=1..k} a_i·T(ceil(b_i·n))   n >= n0
//! T(n) = d                                                         n <  n0
//! ```
//!
//! The crate provides, over a validated [`model::RecurrenceSpec`]:
//!
//! - [`parser`]: a small text format for recurrences and its exact
//!   canonical printer
//! - [`characteristic`]: the function g(x) = sum a_i·b_i^x and the unique
//!   root r of g(x) = 1
//! - [`asymptotics`]: the growth class derived from comparing r with
//!   alpha, plus empirical log-log slope estimation as a cross-check
//! - [`evaluator`]: exact bottom-up and memoized evaluation of T, an
//!   arbitrary-precision rational mode, and geometric sampling
//! - [`certificate`]: explicit witness constants (f1, f2, f3, m0, M) for
//!   the upper bound T(n) = O(n^r) in the dominant-root case, with a
//!   finite-range verifier for the whole induction chain
//!
//! `log` is the base-2 logarithm throughout.

pub mod asymptotics;
pub mod certificate;
pub mod characteristic;
pub mod evaluator;
pub mod model;
pub mod number;
pub mod parser;

pub use model::{validate, RecurrenceSpec};
pub use number::Real;
pub use parser::{canonical, parse};
