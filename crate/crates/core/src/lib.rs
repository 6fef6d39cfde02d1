//! Behavioral surrogate models of memory compilers.
//!
//! The crate covers the whole pipeline: compiler parameter spaces
//! ([`paramspace`]), a synthetic ground-truth compiler ([`synthcompiler`]),
//! data preparation ([`dataset`]), a feed-forward network trained with Adam
//! ([`neuralnet`]), a versioned model registry ([`modelzoo`]), error metrics
//! and model studies ([`evalmetrics`]), an exhaustive PPA optimizer
//! ([`optimizer`]) and Monte Carlo decision reliability ([`reliability`]).

pub mod dataset;
pub mod error;
pub mod evalmetrics;
pub mod fixtures;
pub mod modelzoo;
pub mod neuralnet;
pub mod optimizer;
pub mod par;
pub mod paramspace;
pub mod reliability;
pub mod seed;
pub mod synthcompiler;

pub use error::{Error, ErrorCategory, Result};
