//! Citation-graph analytics for the displacement (disruption) index.
//!
//! The crate is organised around an immutable [`CitationGraph`] built by
//! [`corpus::ingest`]. Per-paper metrics live in [`displacement`], the
//! rank-curve model of reference citations in [`zipf`], multiple-discovery
//! pools in [`multiples`], and the Poisson / power-law comparison of pool
//! sizes in [`distfit`]. [`overlap`] measures topical alignment between a
//! paper and its most-cited reference, and [`classifier`] talks to a
//! chat-completions endpoint to label theory vs method breakthroughs.

pub mod classifier;
pub mod corpus;
pub mod displacement;
pub mod distfit;
mod error;
pub mod fmt;
pub mod multiples;
pub mod overlap;
pub mod report;
pub mod special;
pub mod synth;
pub mod zipf;

pub use corpus::{CitationGraph, CorpusFilter, DocType, NodeId, PaperRecord};
pub use displacement::{CitationTriple, DisplacementReport, Variant, VariantConfig};
pub use error::{Error, Result};

/// Version byte written after the snapshot magic.
pub const SNAPSHOT_FORMAT_VERSION: u8 = 1;
