//! Factorization-based EDS semantic parsing and evaluation.

pub mod align;
pub mod arcs;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod encoder;
pub mod error;
pub mod graph;
pub mod metrics;
pub mod nn;
pub mod pheno;
pub mod pipeline;
pub mod smatch;
pub mod tagger;
mod train;

pub use train::EpochLog;

pub use error::{Error, Result};
