//! Max-entry statistics of sample correlation matrices, moment/series
//! equivalence oracles, and deterministic Monte Carlo experiments for the
//! strong limit theorems of the largest entries.

// `!(x > 0.0)` style checks are there to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod error;
pub mod oracle;
pub mod quad;
pub mod rng;
pub mod seqkit;
pub mod sims;
pub mod stats;
pub mod summation;

pub use distributions::{DistributionSpec, Family, Moment};
pub use error::{Error, Result};
pub use seqkit::SequenceSpec;
