//! `papers.jsonl` + `edges.tsv` ingest with eligibility filters.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::graph::{CitationGraph, GraphBuilder, NodeId};
use super::record::{DocType, PaperRecord};

/// Which papers survive ingest.
///
/// Degree thresholds are evaluated once, on the graph left after the
/// document-type and year filters, so raising a threshold can only remove
/// papers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusFilter {
    pub journal_only: bool,
    pub min_references: u32,
    pub min_citations: u32,
    pub year_range: Option<(i32, i32)>,
    /// Records with a year outside this range are rejected outright.
    pub plausible_years: (i32, i32),
}

impl Default for CorpusFilter {
    fn default() -> Self {
        CorpusFilter {
            journal_only: true,
            min_references: 0,
            min_citations: 0,
            year_range: None,
            plausible_years: (1000, 2100),
        }
    }
}

impl CorpusFilter {
    pub fn validate(&self) -> Result<()> {
        if let Some((lo, hi)) = self.year_range {
            if lo > hi {
                return Err(Error::InvalidFilter(format!("year range [{lo}, {hi}] is empty")));
            }
        }
        let (lo, hi) = self.plausible_years;
        if lo > hi {
            return Err(Error::InvalidFilter(format!("plausible years [{lo}, {hi}] is empty")));
        }
        Ok(())
    }

    fn admits(&self, p: &PaperRecord) -> bool {
        if self.journal_only && p.doc_type != DocType::JournalArticle {
            return false;
        }
        match self.year_range {
            Some((lo, hi)) => (lo..=hi).contains(&p.year),
            None => true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnknownEdgePolicy {
    /// Skip the edge and count it.
    #[default]
    Skip,
    /// Fail the whole ingest.
    Strict,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestOptions {
    pub filter: CorpusFilter,
    pub unknown_edges: UnknownEdgePolicy,
}

/// Counters reported alongside the graph.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub papers_read: usize,
    pub papers_kept: usize,
    pub rejected_implausible_year: usize,
    pub filtered_doc_type_or_year: usize,
    pub filtered_degree: usize,
    pub edges_read: usize,
    pub edges_kept: usize,
    pub duplicate_edges: usize,
    pub self_loops: usize,
    pub unknown_endpoint: usize,
    pub filtered_endpoint: usize,
}

#[derive(Deserialize)]
struct RawPaper {
    id: String,
    year: i32,
    doc_type: String,
    #[serde(default)]
    fields: Vec<u32>,
    #[serde(default)]
    authors: Option<Vec<String>>,
}

fn parse_paper(line: &str) -> std::result::Result<PaperRecord, String> {
    let raw: RawPaper = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if raw.id.is_empty() {
        return Err("empty id".into());
    }
    let doc_type = raw.doc_type.parse::<DocType>()?;
    let mut rec = PaperRecord {
        id: raw.id,
        year: raw.year,
        doc_type,
        fields: raw.fields,
        authors: raw.authors,
    };
    rec.normalize_fields();
    Ok(rec)
}

fn parse_edge(line: &str) -> std::result::Result<(&str, &str), String> {
    let mut cols = line.split('\t');
    let citing = cols.next().map(str::trim).unwrap_or("");
    let cited = cols.next().map(str::trim).unwrap_or("");
    if cols.next().is_some() {
        return Err("expected exactly two tab-separated columns".into());
    }
    if citing.is_empty() || cited.is_empty() {
        return Err("expected `citing_id<TAB>cited_id`".into());
    }
    Ok((citing, cited))
}

fn read_lines<R: BufRead>(reader: R) -> Result<Vec<String>> {
    reader.lines().collect::<std::io::Result<Vec<_>>>().map_err(Error::from)
}

/// Builds a graph from the two line-oriented sources.
///
/// Lines are parsed in parallel; graph construction itself is sequential
/// and assigns dense ids in input order.
pub fn ingest<P: BufRead, E: BufRead>(
    papers_source: P,
    edges_source: E,
    options: &IngestOptions,
) -> Result<(CitationGraph, IngestStats)> {
    ingest_named(papers_source, "papers", edges_source, "edges", options)
}

pub fn ingest_files(
    papers_path: &Path,
    edges_path: &Path,
    options: &IngestOptions,
) -> Result<(CitationGraph, IngestStats)> {
    let papers = BufReader::new(File::open(papers_path)?);
    let edges = BufReader::new(File::open(edges_path)?);
    ingest_named(
        papers,
        &papers_path.display().to_string(),
        edges,
        &edges_path.display().to_string(),
        options,
    )
}

fn ingest_named<P: BufRead, E: BufRead>(
    papers_source: P,
    papers_name: &str,
    edges_source: E,
    edges_name: &str,
    options: &IngestOptions,
) -> Result<(CitationGraph, IngestStats)> {
    let filter = &options.filter;
    filter.validate()?;
    let mut stats = IngestStats::default();

    let paper_lines = read_lines(papers_source)?;
    let parsed: Vec<Option<std::result::Result<PaperRecord, String>>> = paper_lines
        .par_iter()
        .map(|l| (!l.trim().is_empty()).then(|| parse_paper(l)))
        .collect();

    // every id seen, so that edges to filtered papers are not mistaken for unknown ids
    let mut known: HashSet<String> = HashSet::with_capacity(parsed.len());
    let mut candidates: Vec<PaperRecord> = Vec::new();
    let (year_lo, year_hi) = filter.plausible_years;
    for (i, item) in parsed.into_iter().enumerate() {
        let Some(item) = item else { continue };
        let rec = item.map_err(|message| Error::Malformed {
            source_name: papers_name.to_string(),
            line: i + 1,
            message,
        })?;
        stats.papers_read += 1;
        if !known.insert(rec.id.clone()) {
            return Err(Error::Malformed {
                source_name: papers_name.to_string(),
                line: i + 1,
                message: format!("duplicate paper id `{}`", rec.id),
            });
        }
        if !(year_lo..=year_hi).contains(&rec.year) {
            stats.rejected_implausible_year += 1;
            continue;
        }
        if !filter.admits(&rec) {
            stats.filtered_doc_type_or_year += 1;
            continue;
        }
        candidates.push(rec);
    }
    let candidate_index: HashMap<&str, u32> = candidates
        .iter()
        .enumerate()
        .map(|(i, p)| (p.id.as_str(), i as u32))
        .collect();

    let edge_lines = read_lines(edges_source)?;
    let parsed_edges: Vec<Option<std::result::Result<(&str, &str), String>>> = edge_lines
        .par_iter()
        .map(|l| (!l.trim().is_empty()).then(|| parse_edge(l)))
        .collect();

    let mut edges: Vec<(u32, u32)> = Vec::new();
    for (i, item) in parsed_edges.into_iter().enumerate() {
        let Some(item) = item else { continue };
        let (citing, cited) = item.map_err(|message| Error::Malformed {
            source_name: edges_name.to_string(),
            line: i + 1,
            message,
        })?;
        stats.edges_read += 1;
        if let Some(missing) = [citing, cited].into_iter().find(|id| !known.contains(*id)) {
            match options.unknown_edges {
                UnknownEdgePolicy::Skip => {
                    stats.unknown_endpoint += 1;
                    continue;
                }
                UnknownEdgePolicy::Strict => {
                    return Err(Error::UnknownPaper {
                        source_name: edges_name.to_string(),
                        line: i + 1,
                        id: missing.to_string(),
                    })
                }
            }
        }
        if citing == cited {
            stats.self_loops += 1;
            continue;
        }
        match (candidate_index.get(citing), candidate_index.get(cited)) {
            (Some(&s), Some(&t)) => edges.push((s, t)),
            _ => stats.filtered_endpoint += 1,
        }
    }
    edges.sort_unstable();
    let before = edges.len();
    edges.dedup();
    stats.duplicate_edges = before - edges.len();

    let keep: Vec<bool> = if filter.min_references > 0 || filter.min_citations > 0 {
        let mut out_deg = vec![0u32; candidates.len()];
        let mut in_deg = vec![0u32; candidates.len()];
        for &(s, t) in &edges {
            out_deg[s as usize] += 1;
            in_deg[t as usize] += 1;
        }
        (0..candidates.len())
            .map(|i| out_deg[i] >= filter.min_references && in_deg[i] >= filter.min_citations)
            .collect()
    } else {
        vec![true; candidates.len()]
    };

    let mut builder = GraphBuilder::new();
    let mut remap: Vec<Option<NodeId>> = vec![None; candidates.len()];
    for (i, rec) in candidates.into_iter().enumerate() {
        if keep[i] {
            remap[i] = Some(builder.add_paper(rec)?);
        } else {
            stats.filtered_degree += 1;
        }
    }
    for &(s, t) in &edges {
        match (remap[s as usize], remap[t as usize]) {
            (Some(a), Some(b)) => {
                builder.add_edge(a, b);
            }
            _ => stats.filtered_endpoint += 1,
        }
    }
    let graph = builder.build();
    stats.papers_kept = graph.len();
    stats.edges_kept = graph.edge_count();
    Ok((graph, stats))
}

/// Writes `graph` back out as `papers.jsonl` and `edges.tsv` text, papers in
/// internal id order and edges sorted by (citing, cited).
pub fn write_corpus<P: Write, E: Write>(graph: &CitationGraph, mut papers: P, mut edges: E) -> Result<()> {
    for p in graph.papers() {
        serde_json::to_writer(&mut papers, p).map_err(std::io::Error::other)?;
        papers.write_all(b"\n")?;
    }
    for (s, t) in graph.edges() {
        writeln!(edges, "{}\t{}", graph.external_id(s), graph.external_id(t))?;
    }
    papers.flush()?;
    edges.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAPERS: &str = r#"{"id": "F", "year": 2000, "doc_type": "journal-article", "fields": [3, 1, 3]}
{"id": "A", "year": 2005, "doc_type": "journal-article", "fields": [1], "authors": ["Ada"]}
{"id": "B", "year": 1990, "doc_type": "book", "fields": []}
"#;

    fn opts_no_degree() -> IngestOptions {
        IngestOptions::default()
    }

    fn run(papers: &str, edges: &str, opts: &IngestOptions) -> Result<(CitationGraph, IngestStats)> {
        ingest(papers.as_bytes(), edges.as_bytes(), opts)
    }

    #[test]
    fn journal_filter_drops_book_and_its_edges() {
        let (g, stats) = run(PAPERS, "A\tF\nF\tB\n", &opts_no_degree()).unwrap();
        assert_eq!(g.len(), 2);
        let f = g.node("F").unwrap();
        let a = g.node("A").unwrap();
        assert!(g.node("B").is_none());
        assert_eq!(g.edge_count(), 1);
        assert!(g.cites(a, f));
        assert_eq!(stats.filtered_doc_type_or_year, 1);
        assert_eq!(stats.filtered_endpoint, 1);
        assert_eq!(g.paper(f).fields, vec![1, 3]);
        assert_eq!(g.paper(a).authors.as_deref(), Some(&["Ada".to_string()][..]));
    }

    #[test]
    fn duplicate_edges_collapse() {
        let (g, stats) = run(PAPERS, "A\tF\nA\tF\n", &opts_no_degree()).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(stats.duplicate_edges, 1);
    }

    #[test]
    fn self_loop_rejected_and_counted() {
        let (g, stats) = run(PAPERS, "F\tF\n", &opts_no_degree()).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(stats.self_loops, 1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let papers = "{\"id\": \"F\", \"year\": 2000, \"doc_type\": \"journal-article\"}\n{not json}\n";
        match run(papers, "", &opts_no_degree()) {
            Err(Error::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed error, got {other:?}"),
        }
        match run(PAPERS, "A\tF\nA F\n", &opts_no_degree()) {
            Err(Error::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_ids_skip_or_fail() {
        let (_, stats) = run(PAPERS, "A\tZ\n", &opts_no_degree()).unwrap();
        assert_eq!(stats.unknown_endpoint, 1);
        let strict = IngestOptions {
            unknown_edges: UnknownEdgePolicy::Strict,
            ..IngestOptions::default()
        };
        match run(PAPERS, "A\tF\nA\tZ\n", &strict) {
            Err(Error::UnknownPaper { line, id, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(id, "Z");
            }
            other => panic!("expected unknown paper error, got {other:?}"),
        }
    }

    #[test]
    fn implausible_years_and_duplicate_ids() {
        let papers = "{\"id\": \"X\", \"year\": 3000, \"doc_type\": \"journal-article\"}\n";
        let (g, stats) = run(papers, "", &opts_no_degree()).unwrap();
        assert!(g.is_empty());
        assert_eq!(stats.rejected_implausible_year, 1);

        let dup = "{\"id\": \"X\", \"year\": 2000, \"doc_type\": \"journal-article\"}\n\
                   {\"id\": \"X\", \"year\": 2001, \"doc_type\": \"journal-article\"}\n";
        assert!(matches!(run(dup, "", &opts_no_degree()), Err(Error::Malformed { line: 2, .. })));
    }

    #[test]
    fn degree_thresholds_apply_once() {
        let opts = IngestOptions {
            filter: CorpusFilter {
                min_citations: 1,
                ..CorpusFilter::default()
            },
            ..IngestOptions::default()
        };
        // A cites F; A has no citations and is dropped, which leaves F with none.
        let (g, stats) = run(PAPERS, "A\tF\n", &opts).unwrap();
        assert_eq!(g.len(), 1);
        assert!(g.node("F").is_some());
        assert_eq!(g.edge_count(), 0);
        assert_eq!(stats.filtered_degree, 1);
    }

    #[test]
    fn inverted_year_range_is_invalid() {
        let opts = IngestOptions {
            filter: CorpusFilter {
                year_range: Some((2010, 2000)),
                ..CorpusFilter::default()
            },
            ..IngestOptions::default()
        };
        assert!(matches!(run(PAPERS, "", &opts), Err(Error::InvalidFilter(_))));
    }

    #[test]
    fn export_round_trips() {
        let g = crate::synth::random_graph(60, 4, (1990, 2010), 5);
        let (mut papers, mut edges) = (Vec::new(), Vec::new());
        write_corpus(&g, &mut papers, &mut edges).unwrap();
        let (back, stats) = run(
            std::str::from_utf8(&papers).unwrap(),
            std::str::from_utf8(&edges).unwrap(),
            &IngestOptions::default(),
        )
        .unwrap();
        assert_eq!(back, g);
        assert_eq!(stats.edges_kept, g.edge_count());
    }
}
