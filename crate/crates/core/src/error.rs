//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Site or box index outside the torus.
    #[error("index {index} out of range ({limit} {kind})")]
    IndexOutOfRange {
        index: usize,
        limit: usize,
        kind: &'static str,
    },

    /// Exact-enumeration routine asked for more sites than its hard cap.
    #[error("state-space cap exceeded: {sites} sites > cap {cap}")]
    CapExceeded { sites: usize, cap: usize },

    /// A replica consumed its event budget before reaching the target time.
    #[error(
        "event budget exhausted after {events} events (budget {budget}) at micro time {micro_time} \
         while running to macro time {macro_time}"
    )]
    EventBudget {
        events: u64,
        budget: u64,
        micro_time: f64,
        macro_time: f64,
    },

    /// Invalid model or measure parameters.
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation was called outside its contract.
    #[error("usage error: {0}")]
    Usage(String),

    /// A numerical routine failed to converge to its tolerance.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Two independent computations of the same quantity disagree.
    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    /// Experiment validation diagnostics, one per line.
    #[error("experiment validation failed:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
