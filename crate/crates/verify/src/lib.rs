//! Verification suites for `chronodet-core`: configuration, parallel
//! trial execution, and JSON/CSV reports. The `verify` binary is a thin
//! wrapper around [`run_suite`].

pub mod config;
pub mod report;
pub mod suites;

pub use config::{Format, SuiteConfig};
pub use report::{Check, Report};
pub use suites::run_suite;

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("refused: {0}")]
    Domain(#[from] chronodet_core::Error),
    #[error("io error: {0}")]
    Io(String),
}

impl SuiteError {
    /// Exit code for the command line: configuration and domain errors
    /// map to 2, distinct from assertion failures (1).
    pub fn exit_code(&self) -> i32 {
        2
    }
}
