//! IO, parallel sweeps, reports and the command line on top of `dualrail-core`.

pub mod cli;
pub mod config;
mod error;
pub mod formats;
pub mod parallel;
pub mod report;

pub use error::{Error, Result};
