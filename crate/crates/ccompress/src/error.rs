use std::path::PathBuf;

use ccompress_core::Error as CoreError;

/// Errors surfaced by the command-line front end.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed input file; `at` is the JSON path and line/column.
    #[error("{}: {msg} (at {at})", path.display())]
    Parse { path: PathBuf, at: String, msg: String },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    /// Flags that are individually valid but do not fit together.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    /// The search for a good coin realization or sample ran out of budget.
    /// The partial report, if any, has already been written.
    #[error("{0}")]
    SearchExhausted(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    /// Internal invariant failure; never expected.
    pub const INTERNAL: i32 = 1;
    pub const INPUT: i32 = 2;
    pub const SEARCH_EXHAUSTED: i32 = 3;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::SearchExhausted(_)
            | CliError::Core(CoreError::CoinBudgetExhausted { .. } | CoreError::RetryBudgetExhausted { .. }) => {
                exit::SEARCH_EXHAUSTED
            }
            CliError::Core(CoreError::InvariantViolated(_)) => exit::INTERNAL,
            _ => exit::INPUT,
        }
    }
}
