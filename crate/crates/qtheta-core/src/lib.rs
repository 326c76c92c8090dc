//! Exact-arithmetic engine for truncated q-series with Laurent-polynomial
//! coefficients, plus a catalog of classical q-series identities verified
//! coefficient by coefficient.
//!
//! Everything is computed over arbitrary-precision rationals; there is no
//! floating point anywhere, and series comparisons are exact equality of
//! canonical coefficients.

pub mod blocks;
pub mod catalog;
pub mod cli;
pub mod error;
pub mod expr;
pub mod laurent;
pub mod report;
pub mod rewrite;
pub mod series;
pub mod window;

pub use error::{Error, Result};
pub use laurent::{ExpVec, LaurentPoly, Rational, Var};
pub use series::{MismatchRecord, Monomial, QSeries};
