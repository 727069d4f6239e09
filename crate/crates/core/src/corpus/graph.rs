//! Compressed sparse row citation graph.
//!
//! Every paper gets a dense `NodeId` in insertion order. Two CSR arrays
//! are kept: `refs` (out-edges, the papers a node cites) and `citers`
//! (in-edges). Both neighbour lists are sorted and duplicate-free, which
//! lets the metric code intersect them with merges and binary searches.

use std::collections::HashMap;

use crate::error::{Error, Result};

use super::record::PaperRecord;

pub type NodeId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Csr {
    pub(crate) offsets: Vec<u64>,
    pub(crate) targets: Vec<NodeId>,
}

impl Csr {
    /// Builds from `(source, target)` pairs that are already sorted and
    /// deduplicated by `(source, target)`.
    fn from_sorted_pairs(n: usize, pairs: &[(NodeId, NodeId)]) -> Self {
        let mut offsets = vec![0u64; n + 1];
        for &(s, _) in pairs {
            offsets[s as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let targets = pairs.iter().map(|&(_, t)| t).collect();
        Csr { offsets, targets }
    }

    #[inline]
    fn row(&self, v: NodeId) -> &[NodeId] {
        let start = self.offsets[v as usize] as usize;
        let end = self.offsets[v as usize + 1] as usize;
        &self.targets[start..end]
    }

    pub(crate) fn transpose(&self, n: usize) -> Csr {
        let mut pairs: Vec<(NodeId, NodeId)> = Vec::with_capacity(self.targets.len());
        for s in 0..n as NodeId {
            for &t in self.row(s) {
                pairs.push((t, s));
            }
        }
        pairs.sort_unstable();
        Csr::from_sorted_pairs(n, &pairs)
    }

    /// Checks offsets are monotone, in bounds, and every row sorted and unique.
    pub(crate) fn validate(&self, n: usize) -> std::result::Result<(), String> {
        if self.offsets.len() != n + 1 || self.offsets[0] != 0 {
            return Err("offset array has the wrong shape".into());
        }
        if *self.offsets.last().unwrap() as usize != self.targets.len() {
            return Err("offsets do not cover the edge array".into());
        }
        for w in self.offsets.windows(2) {
            if w[0] > w[1] {
                return Err("offsets are not monotone".into());
            }
        }
        for v in 0..n as NodeId {
            let row = self.row(v);
            if row.iter().any(|&t| t as usize >= n || t == v) {
                return Err(format!("row {v} has an out-of-range target or self-loop"));
            }
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("row {v} is not strictly sorted"));
            }
        }
        Ok(())
    }
}

/// Immutable bidirectional citation graph.
///
/// There is no mutating API: construct through [`GraphBuilder`],
/// [`ingest`](super::ingest) or [`load_snapshot`](super::load_snapshot).
/// The graph is `Send + Sync` and can be shared freely across threads.
#[derive(Debug, Clone)]
pub struct CitationGraph {
    papers: Vec<PaperRecord>,
    index: HashMap<String, NodeId>,
    refs: Csr,
    citers: Csr,
}

impl PartialEq for CitationGraph {
    fn eq(&self, other: &Self) -> bool {
        self.papers == other.papers && self.refs == other.refs && self.citers == other.citers
    }
}

impl CitationGraph {
    pub(crate) fn from_parts(papers: Vec<PaperRecord>, refs: Csr) -> Result<Self> {
        let mut index = HashMap::with_capacity(papers.len());
        for (i, p) in papers.iter().enumerate() {
            if index.insert(p.id.clone(), i as NodeId).is_some() {
                return Err(Error::InvalidInput(format!("duplicate paper id `{}`", p.id)));
            }
        }
        let citers = refs.transpose(papers.len());
        Ok(CitationGraph {
            papers,
            index,
            refs,
            citers,
        })
    }

    pub fn empty() -> Self {
        CitationGraph {
            papers: Vec::new(),
            index: HashMap::new(),
            refs: Csr {
                offsets: vec![0],
                targets: Vec::new(),
            },
            citers: Csr {
                offsets: vec![0],
                targets: Vec::new(),
            },
        }
    }

    pub fn len(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.refs.targets.len()
    }

    pub fn papers(&self) -> &[PaperRecord] {
        &self.papers
    }

    #[inline]
    pub fn paper(&self, v: NodeId) -> &PaperRecord {
        &self.papers[v as usize]
    }

    #[inline]
    pub fn year(&self, v: NodeId) -> i32 {
        self.papers[v as usize].year
    }

    pub fn external_id(&self, v: NodeId) -> &str {
        &self.papers[v as usize].id
    }

    /// Dense id for an external paper id.
    pub fn node(&self, external_id: &str) -> Option<NodeId> {
        self.index.get(external_id).copied()
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = NodeId> {
        0..self.papers.len() as NodeId
    }

    /// Papers cited by `v`, ascending.
    #[inline]
    pub fn references(&self, v: NodeId) -> &[NodeId] {
        self.refs.row(v)
    }

    /// Papers citing `v`, ascending.
    #[inline]
    pub fn citers(&self, v: NodeId) -> &[NodeId] {
        self.citers.row(v)
    }

    #[inline]
    pub fn citation_count(&self, v: NodeId) -> usize {
        self.citers(v).len()
    }

    #[inline]
    pub fn reference_count(&self, v: NodeId) -> usize {
        self.references(v).len()
    }

    #[inline]
    pub fn cites(&self, citing: NodeId, cited: NodeId) -> bool {
        self.references(citing).binary_search(&cited).is_ok()
    }

    /// All `(citing, cited)` edges in CSR order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes()
            .flat_map(move |v| self.references(v).iter().map(move |&t| (v, t)))
    }

    pub(crate) fn out_csr(&self) -> &Csr {
        &self.refs
    }
}

/// Incremental builder; the single-writer phase before a graph is frozen.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    papers: Vec<PaperRecord>,
    index: HashMap<String, NodeId>,
    edges: Vec<(NodeId, NodeId)>,
    self_loops: usize,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_paper(&mut self, mut record: PaperRecord) -> Result<NodeId> {
        if self.index.contains_key(&record.id) {
            return Err(Error::InvalidInput(format!("duplicate paper id `{}`", record.id)));
        }
        record.normalize_fields();
        let id = self.papers.len() as NodeId;
        self.index.insert(record.id.clone(), id);
        self.papers.push(record);
        Ok(id)
    }

    pub fn node(&self, external_id: &str) -> Option<NodeId> {
        self.index.get(external_id).copied()
    }

    pub fn len(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    /// Records `citing -> cited`. Self-loops are rejected and counted;
    /// duplicates are removed at build time.
    pub fn add_edge(&mut self, citing: NodeId, cited: NodeId) -> bool {
        assert!(
            (citing as usize) < self.papers.len() && (cited as usize) < self.papers.len(),
            "edge endpoint out of range"
        );
        if citing == cited {
            self.self_loops += 1;
            return false;
        }
        self.edges.push((citing, cited));
        true
    }

    pub fn self_loops(&self) -> usize {
        self.self_loops
    }

    /// Freezes the graph, returning it with the number of duplicate edges dropped.
    pub fn build_with_stats(mut self) -> (CitationGraph, usize) {
        self.edges.sort_unstable();
        let before = self.edges.len();
        self.edges.dedup();
        let duplicates = before - self.edges.len();
        let refs = Csr::from_sorted_pairs(self.papers.len(), &self.edges);
        let citers = refs.transpose(self.papers.len());
        let graph = CitationGraph {
            papers: self.papers,
            index: self.index,
            refs,
            citers,
        };
        (graph, duplicates)
    }

    pub fn build(self) -> CitationGraph {
        self.build_with_stats().0
    }
}
