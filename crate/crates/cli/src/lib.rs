//! Command line and HTTP front ends of `memplan-core`.

pub mod commands;
pub mod config;
pub mod service;
