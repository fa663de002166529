//! Numerical toolkit for upper tails of k-term arithmetic progression counts
//! in random subsets of `[N]` and `Z/NZ`.

pub mod ap_count;
pub mod cli;
pub mod domain;
pub mod error;
pub mod extremal;
pub mod gaussian_width;
pub mod replica;
pub mod rng;
pub mod tail_prob;
pub mod variational;

pub use domain::{AmbientKind, AmbientSet, DensityFunction, Params};
pub use error::{Error, Result};
