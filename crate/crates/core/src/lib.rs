//! Exact arithmetic on simple sub-probability valuations over finite posets.
//!
//! The crate covers the valuation order (via upper sets and via a max-flow
//! splitting network), realizations of increasing chains as partial maps on
//! the Cantor tree, their limits and Scott extensions, and the quantile
//! adjoint for measures on chains.

pub mod cantor;
pub mod dyadic;
pub mod fixtures;
pub mod format;
pub mod poset;
pub mod quantile;
pub mod realization;
#[cfg(feature = "testkit")]
pub mod testkit;
pub mod transport;
pub mod valuation;

pub use dyadic::{Dyadic, DyadicError};
pub use poset::{Classification, FinitePoset, PosetError, UpperSet};
pub use valuation::{OrderVerdict, SimpleValuation, ValuationError};
