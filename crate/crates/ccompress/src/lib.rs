//! File formats, parallel runners and the command-line front end for
//! `ccompress-core`.
//!
//! Exit codes: 0 on success, 2 for bad input or flags, 3 when a randomized
//! search ran out of budget (its partial report is still written), and 1
//! for internal invariant failures.

pub mod cli;
pub mod commands;
mod error;
pub mod formats;
pub mod runners;

pub use error::{exit, CliError, Result};
