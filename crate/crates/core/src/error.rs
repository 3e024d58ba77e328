//! Error types shared across the toolkit.

use thiserror::Error;

/// Crate-wide error type.
///
/// Variants mirror the failure classes of the pipeline: value-range and
/// shape violations on tensors, size mismatches between paired inputs,
/// I/O and file-format problems, bad configuration, degenerate data, and
/// stale or missing pipeline artifacts.
#[derive(Debug, Error)]
pub enum Error {
    /// A value fell outside its permitted range (e.g. pixel outside [0,1]).
    #[error("range error: {0}")]
    Range(String),

    /// Tensor rank or dimensions do not match what the operation requires.
    #[error("shape error: {0}")]
    Shape(String),

    /// Paired inputs disagree in length, or a batch is unexpectedly empty.
    #[error("size error: {0}")]
    Size(String),

    /// Underlying filesystem failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// A file exists but its contents are malformed.
    #[error("format error: {0}")]
    Format(String),

    /// Invalid configuration (non-positive epochs, bad attack parameters, ...).
    #[error("config error: {0}")]
    Config(String),

    /// Data is degenerate for the requested computation (e.g. a class is absent).
    #[error("data error: {0}")]
    Data(String),

    /// A ratio was requested over an empty denominator.
    #[error("empty error: {0}")]
    Empty(String),

    /// A pipeline artifact is missing or its recorded hash no longer matches.
    #[error("stale artifact: {0}")]
    StaleArtifact(String),
}

pub type Result<T> = std::result::Result<T, Error>;
