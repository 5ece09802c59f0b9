//! Information-theoretic feature selection.
//!
//! Forward selection driven by conditional mutual information with
//! surrogate-based maximum-statistic testing, backward pruning, the BROJA
//! partial information decomposition, benchmark generators and the
//! redundancy-lattice bookkeeping used to reason about which information
//! atoms a chain of MI/CMI terms touches.

pub mod benchmarks;
pub mod dataset;
pub mod error;
pub mod estimators;
pub mod evaluation;
pub mod lattice;
pub mod pid;
pub mod rng;
pub mod selection;

pub use dataset::{Dataset, Values, Variable};
pub use error::{Error, Result};
pub use rng::Seed;
