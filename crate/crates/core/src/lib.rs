//! Robustness evaluation for binary text classifiers on narrative corpora.
//!
//! The pipeline ingests and filters a labelled corpus, trains shallow
//! classifiers (or talks to an external one over a line-delimited JSON
//! protocol), perturbs test sets by removing topic words or shuffling
//! sentences, and reports accuracy changes with paired t-tests.

pub mod corpus;
pub mod error;
pub mod features;
pub mod models;
pub mod perturb;
pub mod report;
pub mod rng;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
