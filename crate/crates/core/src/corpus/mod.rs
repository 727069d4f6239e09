//! Paper metadata, the immutable citation graph, ingest and snapshots.

mod graph;
mod ingest;
mod record;
mod snapshot;

pub use graph::{CitationGraph, GraphBuilder, NodeId};
pub use ingest::{ingest, ingest_files, write_corpus, CorpusFilter, IngestOptions, IngestStats, UnknownEdgePolicy};
pub use record::{DocType, PaperRecord};
pub use snapshot::{load_snapshot, read_snapshot, save_snapshot, write_snapshot, SNAPSHOT_MAGIC};
