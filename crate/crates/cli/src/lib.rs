//! Command-line front end for `ssaid-core`: input parsing, layered configuration,
//! and reproducible runs described by a manifest.

pub mod args;
pub mod config;
pub mod error;
pub mod gps;
pub mod input;
pub mod run;
