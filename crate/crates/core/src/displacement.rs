//! Citer classification, D-index variants and the d_f / b_f decomposition.
//!
//! For a focal paper `f` with references `R`, every later paper that cites
//! `f` or some `r ∈ R` falls into exactly one class:
//!
//! * type i: cites `f` but no `r ∈ R`
//! * type j: cites `f` and at least one `r ∈ R`
//! * type k: cites some `r ∈ R` but not `f`
//!
//! `D0 = (n_i − n_j) / (n_i + n_j + n_k)`, and writing
//! `d_f = (n_i − n_j) / (n_i + n_j)`, `r_k = n_k / (n_i + n_j)` gives the
//! exact identity `D0 = d_f / (1 + r_k)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{CitationGraph, NodeId};
use crate::error::{Error, Result};
use crate::fmt::{sig12, sig12_opt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Base index.
    D0,
    /// Self-citations (shared author string with the focal) excluded.
    D1,
    /// Only popular references count as references.
    D2,
    /// `n_i / (n_i + n_j)`.
    D3,
    /// `n_i / (n_i + w_j)`, j-type citers weighted by how many references they cite.
    D4,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::D0, Variant::D1, Variant::D2, Variant::D3, Variant::D4];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::D0 => "d0",
            Variant::D1 => "d1",
            Variant::D2 => "d2",
            Variant::D3 => "d3",
            Variant::D4 => "d4",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "d0" => Ok(Variant::D0),
            "d1" => Ok(Variant::D1),
            "d2" => Ok(Variant::D2),
            "d3" => Ok(Variant::D3),
            "d4" => Ok(Variant::D4),
            _ => Err(format!("unknown variant `{s}` (expected d0..d4)")),
        }
    }
}

/// Which D-variants a report carries. `d0` and the decomposition are always present.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantSelection {
    #[default]
    All,
    Only(Variant),
}

impl VariantSelection {
    pub fn includes(self, v: Variant) -> bool {
        match self {
            VariantSelection::All => true,
            VariantSelection::Only(only) => only == v,
        }
    }
}

/// How D2 decides that a reference is popular.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PopularRule {
    /// In-degree at least this many citations.
    Threshold(u32),
    /// In-degree at least the 75th percentile (nearest rank) of the
    /// in-degrees of all cited papers in the graph.
    TopQuartile,
}

impl Default for PopularRule {
    fn default() -> Self {
        PopularRule::Threshold(24)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantConfig {
    pub variant: VariantSelection,
    pub popular: PopularRule,
    /// Count only citers published in or after the focal's year.
    pub time_filter: bool,
    /// `c_max` counts every citation of the top reference; when false only
    /// citations from the focal's year onwards.
    pub lifetime_c_max: bool,
    /// Focal eligibility. Values below 1 are treated as 1.
    pub min_references: u32,
    pub min_citations: u32,
}

impl Default for VariantConfig {
    fn default() -> Self {
        VariantConfig {
            variant: VariantSelection::All,
            popular: PopularRule::default(),
            time_filter: true,
            lifetime_c_max: true,
            min_references: 1,
            min_citations: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationTriple {
    pub n_i: u64,
    pub n_j: u64,
    pub n_k: u64,
    pub w_j: u64,
}

impl CitationTriple {
    pub fn new(n_i: u64, n_j: u64, n_k: u64) -> Self {
        CitationTriple { n_i, n_j, n_k, w_j: n_j }
    }

    /// Citers of the focal that pass the filters (`n_i + n_j`).
    pub fn c_f(&self) -> u64 {
        self.n_i + self.n_j
    }
}

/// The index value for `variant` computed on `triple`.
///
/// D0, D1 and D2 share a formula; they differ only in how the triple was
/// classified.
pub fn d_index(triple: &CitationTriple, variant: Variant) -> Result<f64> {
    let (num, den, metric) = match variant {
        Variant::D0 | Variant::D1 | Variant::D2 => (
            triple.n_i as f64 - triple.n_j as f64,
            triple.n_i + triple.n_j + triple.n_k,
            variant.as_str(),
        ),
        Variant::D3 => (triple.n_i as f64, triple.n_i + triple.n_j, "d3"),
        Variant::D4 => (triple.n_i as f64, triple.n_i + triple.w_j, "d4"),
    };
    if den == 0 {
        return Err(Error::UndefinedMetric { metric });
    }
    Ok(num / den as f64)
}

/// `d_f / (1 + b_f)`.
pub fn approx_d(d_f: f64, b_f: f64) -> f64 {
    d_f / (1.0 + b_f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementReport {
    pub focal: String,
    pub year: i32,
    pub triple: CitationTriple,
    #[serde(serialize_with = "sig12")]
    pub d0: f64,
    #[serde(serialize_with = "sig12_opt")]
    pub d1: Option<f64>,
    #[serde(serialize_with = "sig12_opt")]
    pub d2: Option<f64>,
    #[serde(serialize_with = "sig12_opt")]
    pub d3: Option<f64>,
    #[serde(serialize_with = "sig12_opt")]
    pub d4: Option<f64>,
    #[serde(serialize_with = "sig12")]
    pub d_f: f64,
    #[serde(serialize_with = "sig12")]
    pub r_k: f64,
    pub c_f: u64,
    pub c_max: u64,
    #[serde(serialize_with = "sig12")]
    pub b_f: f64,
    pub top_reference: String,
    /// D1 fell back to D0 because the focal has no author list.
    #[serde(default)]
    pub d1_degraded: bool,
}

impl DisplacementReport {
    pub fn variant(&self, v: Variant) -> Option<f64> {
        match v {
            Variant::D0 => Some(self.d0),
            Variant::D1 => self.d1,
            Variant::D2 => self.d2,
            Variant::D3 => self.d3,
            Variant::D4 => self.d4,
        }
    }

    pub fn approx_d(&self) -> f64 {
        approx_d(self.d_f, self.b_f)
    }
}

/// Per-graph state shared by all focal computations (resolved popular threshold).
#[derive(Debug, Clone)]
pub struct Analyzer<'g> {
    graph: &'g CitationGraph,
    config: VariantConfig,
    popular_threshold: u64,
}

impl<'g> Analyzer<'g> {
    pub fn new(graph: &'g CitationGraph, config: VariantConfig) -> Self {
        let popular_threshold = match config.popular {
            PopularRule::Threshold(t) => t as u64,
            PopularRule::TopQuartile => quartile_threshold(graph),
        };
        Analyzer {
            graph,
            config,
            popular_threshold,
        }
    }

    pub fn graph(&self) -> &'g CitationGraph {
        self.graph
    }

    pub fn config(&self) -> &VariantConfig {
        &self.config
    }

    pub fn popular_threshold(&self) -> u64 {
        self.popular_threshold
    }

    fn ineligible(&self, focal: NodeId, reason: &'static str) -> Error {
        Error::IneligibleFocal {
            id: self.graph.external_id(focal).to_string(),
            reason,
        }
    }

    /// Classifies citers for the triple that `variant` is computed on.
    /// D3 and D4 use the base triple.
    pub fn triple(&self, focal: NodeId, variant: Variant) -> CitationTriple {
        let g = self.graph;
        match variant {
            Variant::D2 => {
                let popular: Vec<NodeId> = g
                    .references(focal)
                    .iter()
                    .copied()
                    .filter(|&r| g.citation_count(r) as u64 >= self.popular_threshold)
                    .collect();
                self.count(focal, &popular, false)
            }
            Variant::D1 => self.count(focal, g.references(focal), true),
            _ => self.count(focal, g.references(focal), false),
        }
    }

    fn citer_ok(&self, focal: NodeId, citer: NodeId, exclude_self: bool) -> bool {
        let g = self.graph;
        if citer == focal {
            return false;
        }
        if self.config.time_filter && g.year(citer) < g.year(focal) {
            return false;
        }
        !(exclude_self && g.paper(citer).shares_author_with(g.paper(focal)))
    }

    fn count(&self, focal: NodeId, refs: &[NodeId], exclude_self: bool) -> CitationTriple {
        let g = self.graph;
        let mut t = CitationTriple::default();
        let focal_citers = g.citers(focal);
        for &c in focal_citers {
            if !self.citer_ok(focal, c, exclude_self) {
                continue;
            }
            let shared = sorted_intersection_len(g.references(c), refs) as u64;
            if shared == 0 {
                t.n_i += 1;
            } else {
                t.n_j += 1;
                t.w_j += shared;
            }
        }
        let mut ref_citers: Vec<NodeId> = refs.iter().flat_map(|&r| g.citers(r).iter().copied()).collect();
        ref_citers.sort_unstable();
        ref_citers.dedup();
        t.n_k = ref_citers
            .into_iter()
            .filter(|&c| self.citer_ok(focal, c, exclude_self) && focal_citers.binary_search(&c).is_err())
            .count() as u64;
        t
    }

    /// Citation count used for `c_max` and for choosing the top reference.
    fn reference_weight(&self, focal: NodeId, r: NodeId) -> u64 {
        let g = self.graph;
        if self.config.lifetime_c_max {
            g.citation_count(r) as u64
        } else {
            let y = g.year(focal);
            g.citers(r).iter().filter(|&&c| g.year(c) >= y).count() as u64
        }
    }

    /// Most-cited reference; ties go to the earlier year, then the smaller id.
    pub fn top_reference(&self, focal: NodeId) -> Option<(NodeId, u64)> {
        let g = self.graph;
        g.references(focal)
            .iter()
            .map(|&r| (r, self.reference_weight(focal, r)))
            .min_by(|&(ra, ca), &(rb, cb)| {
                cb.cmp(&ca)
                    .then(g.year(ra).cmp(&g.year(rb)))
                    .then(ra.cmp(&rb))
            })
    }

    fn check_eligible(&self, focal: NodeId) -> Result<CitationTriple> {
        let min_refs = self.config.min_references.max(1) as usize;
        if self.graph.reference_count(focal) < min_refs {
            return Err(self.ineligible(focal, "too few references"));
        }
        let base = self.triple(focal, Variant::D0);
        if base.c_f() < self.config.min_citations.max(1) as u64 {
            return Err(self.ineligible(focal, "too few citations"));
        }
        Ok(base)
    }

    /// Eligibility-checked triple for the configured variant.
    pub fn classify(&self, focal: NodeId) -> Result<CitationTriple> {
        let base = self.check_eligible(focal)?;
        Ok(match self.config.variant {
            VariantSelection::Only(v @ (Variant::D1 | Variant::D2)) => self.triple(focal, v),
            _ => base,
        })
    }

    pub fn report(&self, focal: NodeId) -> Result<DisplacementReport> {
        let g = self.graph;
        let triple = self.check_eligible(focal)?;
        let sel = self.config.variant;
        let d0 = d_index(&triple, Variant::D0)?;
        let c_f = triple.c_f();

        let mut d1_degraded = false;
        let d1 = if sel.includes(Variant::D1) {
            if g.paper(focal).has_authors() {
                d_index(&self.triple(focal, Variant::D1), Variant::D1).ok()
            } else {
                d1_degraded = true;
                Some(d0)
            }
        } else {
            None
        };
        let d2 = sel
            .includes(Variant::D2)
            .then(|| d_index(&self.triple(focal, Variant::D2), Variant::D2).ok())
            .flatten();
        let d3 = sel
            .includes(Variant::D3)
            .then(|| d_index(&triple, Variant::D3).ok())
            .flatten();
        let d4 = sel
            .includes(Variant::D4)
            .then(|| d_index(&triple, Variant::D4).ok())
            .flatten();

        let (top, c_max) = self
            .top_reference(focal)
            .ok_or_else(|| self.ineligible(focal, "no references"))?;
        Ok(DisplacementReport {
            focal: g.external_id(focal).to_string(),
            year: g.year(focal),
            triple,
            d0,
            d1,
            d2,
            d3,
            d4,
            d_f: (triple.n_i as f64 - triple.n_j as f64) / c_f as f64,
            r_k: triple.n_k as f64 / c_f as f64,
            c_f,
            c_max,
            b_f: c_max as f64 / c_f as f64,
            top_reference: g.external_id(top).to_string(),
            d1_degraded,
        })
    }
}

fn sorted_intersection_len(a: &[NodeId], b: &[NodeId]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    // binary-search the smaller list into the larger when sizes are lopsided
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if small.len() * 16 < large.len() {
        return small.iter().filter(|x| large.binary_search(x).is_ok()).count();
    }
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Nearest-rank 75th percentile of in-degree over papers cited at least once.
pub fn quartile_threshold(graph: &CitationGraph) -> u64 {
    let mut degrees: Vec<u64> = graph
        .nodes()
        .map(|v| graph.citation_count(v) as u64)
        .filter(|&d| d > 0)
        .collect();
    if degrees.is_empty() {
        return 1;
    }
    degrees.sort_unstable();
    let rank = (0.75 * degrees.len() as f64).ceil() as usize;
    degrees[rank.max(1) - 1]
}

pub fn classify_citers(graph: &CitationGraph, focal: NodeId, config: &VariantConfig) -> Result<CitationTriple> {
    Analyzer::new(graph, config.clone()).classify(focal)
}

pub fn decompose(graph: &CitationGraph, focal: NodeId, config: &VariantConfig) -> Result<DisplacementReport> {
    Analyzer::new(graph, config.clone()).report(focal)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchOutput {
    pub reports: Vec<DisplacementReport>,
    pub skipped: usize,
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))
}

/// Reports for every eligible paper in ascending internal id.
///
/// `threads == 0` uses all available cores. The output does not depend on
/// the thread count.
pub fn batch_reports(graph: &CitationGraph, config: &VariantConfig, threads: usize) -> Result<BatchOutput> {
    let mut out = BatchOutput::default();
    for_each_report_chunk(graph, config, threads, 1 << 16, |chunk, skipped| {
        out.reports.extend(chunk);
        out.skipped += skipped;
        Ok(())
    })?;
    Ok(out)
}

/// Streams reports in id order, `chunk` focal papers at a time, so that
/// callers can write results without holding the whole sweep in memory.
pub fn for_each_report_chunk<F>(
    graph: &CitationGraph,
    config: &VariantConfig,
    threads: usize,
    chunk: usize,
    mut sink: F,
) -> Result<()>
where
    F: FnMut(Vec<DisplacementReport>, usize) -> Result<()>,
{
    let analyzer = Analyzer::new(graph, config.clone());
    let pool = pool(threads)?;
    let n = graph.len() as NodeId;
    let chunk = chunk.max(1) as NodeId;
    let mut start = 0;
    while start < n {
        let end = start.saturating_add(chunk).min(n);
        let results: Vec<Option<DisplacementReport>> =
            pool.install(|| (start..end).into_par_iter().map(|v| analyzer.report(v).ok()).collect());
        let skipped = results.iter().filter(|r| r.is_none()).count();
        sink(results.into_iter().flatten().collect(), skipped)?;
        start = end;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    Unweighted,
    CitationWeighted,
}

/// Fraction of papers per year with `D0 > 0`. Citation weighting uses `c_f`.
pub fn displacing_fraction_by_year(reports: &[DisplacementReport], weighting: Weighting) -> BTreeMap<i32, f64> {
    let mut acc: BTreeMap<i32, (f64, f64)> = BTreeMap::new();
    for r in reports {
        let w = match weighting {
            Weighting::Unweighted => 1.0,
            Weighting::CitationWeighted => r.c_f as f64,
        };
        let e = acc.entry(r.year).or_default();
        e.1 += w;
        if r.d0 > 0.0 {
            e.0 += w;
        }
    }
    acc.into_iter()
        .filter(|(_, (_, total))| *total > 0.0)
        .map(|(y, (pos, total))| (y, pos / total))
        .collect()
}
