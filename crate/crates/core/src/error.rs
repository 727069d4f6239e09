use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{source_name}:{line}: malformed record: {message}")]
    Malformed {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("{source_name}:{line}: edge references unknown paper id `{id}`")]
    UnknownPaper {
        source_name: String,
        line: usize,
        id: String,
    },

    #[error("invalid filter: {0}")]
    InvalidFilter(String),

    #[error("incompatible snapshot: {0}")]
    IncompatibleSnapshot(String),

    #[error("snapshot integrity check failed: {0}")]
    SnapshotIntegrity(String),

    #[error("unknown paper id `{0}`")]
    UnknownId(String),

    #[error("ineligible focal paper `{id}`: {reason}")]
    IneligibleFocal { id: String, reason: &'static str },

    #[error("undefined metric {metric}: zero denominator")]
    UndefinedMetric { metric: &'static str },

    #[error("too few references: {0} (at least 3 required)")]
    TooFewReferences(usize),

    #[error("degenerate rank curve: {0}")]
    DegenerateRankCurve(&'static str),

    #[error("heavy-tail divergence: exponent a = {0} must exceed 1")]
    HeavyTailDivergence(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no eligible pairs: {0}")]
    NoEligiblePairs(&'static str),

    #[error("prompt slot `{0}` is empty")]
    EmptyPromptSlot(&'static str),

    #[error("transport error: {0}")]
    Transport(String),

    #[error("endpoint returned HTTP {status}: {body}")]
    HttpStatus { status: u16, body: String },

    #[error("logprobs unavailable: {0}")]
    LogprobsUnavailable(&'static str),

    #[error("malformed endpoint response: {0}")]
    BadResponse(String),

    #[error("progress journal {path} is corrupt ({reason}); restart explicitly to discard it")]
    JournalCorrupt { path: PathBuf, reason: String },

    #[error("batch interrupted after {completed} completed requests")]
    Interrupted { completed: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
