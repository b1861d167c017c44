//! Finite-field trace functions, sums of products and their classification.

pub mod classifier;
pub mod cli;
pub mod config;
pub mod dft;
pub mod error;
pub mod evaluator;
pub mod field;
pub mod hyp_classifier;
pub mod pgl2;
pub mod poly;
pub mod rep_theory;
pub mod report;
pub mod trace;

pub use error::{Error, Result};
