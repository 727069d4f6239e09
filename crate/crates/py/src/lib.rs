//! Python bindings: graphs, per-paper metrics, fits and prompt building.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyIOError, PyKeyError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use displace_core::classifier::{self, ClassificationRequest, PromptMode};
use displace_core::corpus::{self, CorpusFilter, IngestOptions, UnknownEdgePolicy};
use displace_core::displacement::{self, PopularRule, Variant, VariantConfig, VariantSelection};
use displace_core::distfit::{self, CompareOptions, Support, Verdict};
use displace_core::{multiples, overlap, synth, zipf, CitationGraph, DisplacementReport, Error};

create_exception!(displace, DisplaceError, PyException);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        Error::UnknownId(id) => PyKeyError::new_err(id),
        e @ (Error::InvalidInput(_) | Error::InvalidFilter(_) | Error::EmptyPromptSlot(_)) => {
            PyValueError::new_err(e.to_string())
        }
        e => DisplaceError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr>(s: &str) -> PyResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| PyValueError::new_err(e.to_string()))
}

#[pyclass(name = "Graph", module = "displace", frozen)]
pub struct PyGraph {
    inner: CitationGraph,
}

#[pymethods]
impl PyGraph {
    /// Reads `papers.jsonl` and `edges.tsv`.
    #[staticmethod]
    #[pyo3(signature = (papers, edges, journal_only = true, min_references = 0, min_citations = 0, strict = false))]
    fn ingest(
        py: Python<'_>,
        papers: PathBuf,
        edges: PathBuf,
        journal_only: bool,
        min_references: u32,
        min_citations: u32,
        strict: bool,
    ) -> PyResult<Self> {
        let opts = IngestOptions {
            filter: CorpusFilter {
                journal_only,
                min_references,
                min_citations,
                ..CorpusFilter::default()
            },
            unknown_edges: if strict {
                UnknownEdgePolicy::Strict
            } else {
                UnknownEdgePolicy::Skip
            },
        };
        let (inner, _) = py
            .detach(|| corpus::ingest_files(&papers, &edges, &opts))
            .map_err(py_err)?;
        Ok(PyGraph { inner })
    }

    #[staticmethod]
    fn load(py: Python<'_>, path: PathBuf) -> PyResult<Self> {
        let inner = py.detach(|| corpus::load_snapshot(&path)).map_err(py_err)?;
        Ok(PyGraph { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        corpus::save_snapshot(&self.inner, &path).map_err(py_err)
    }

    /// A seeded uniform random graph.
    #[staticmethod]
    #[pyo3(signature = (n, max_refs = 5, year_from = 1990, year_to = 2010, seed = 0))]
    fn random(n: usize, max_refs: usize, year_from: i32, year_to: i32, seed: u64) -> Self {
        PyGraph {
            inner: synth::random_graph(n, max_refs, (year_from, year_to), seed),
        }
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn ids(&self) -> Vec<String> {
        self.inner.papers().iter().map(|p| p.id.clone()).collect()
    }

    fn year(&self, id: &str) -> PyResult<i32> {
        Ok(self.inner.year(self.node(id)?))
    }

    fn references(&self, id: &str) -> PyResult<Vec<String>> {
        let v = self.node(id)?;
        Ok(self.names(self.inner.references(v)))
    }

    fn citers(&self, id: &str) -> PyResult<Vec<String>> {
        let v = self.node(id)?;
        Ok(self.names(self.inner.citers(v)))
    }

    fn __repr__(&self) -> String {
        format!("Graph(papers={}, edges={})", self.inner.len(), self.inner.edge_count())
    }
}

impl PyGraph {
    fn node(&self, id: &str) -> PyResult<u32> {
        self.inner.node(id).ok_or_else(|| PyKeyError::new_err(id.to_string()))
    }

    fn names(&self, vs: &[u32]) -> Vec<String> {
        vs.iter().map(|&v| self.inner.external_id(v).to_string()).collect()
    }
}

#[pyclass(name = "Report", module = "displace", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyReport {
    inner: DisplacementReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn focal(&self) -> &str {
        &self.inner.focal
    }
    #[getter]
    fn year(&self) -> i32 {
        self.inner.year
    }
    #[getter]
    fn n_i(&self) -> u64 {
        self.inner.triple.n_i
    }
    #[getter]
    fn n_j(&self) -> u64 {
        self.inner.triple.n_j
    }
    #[getter]
    fn n_k(&self) -> u64 {
        self.inner.triple.n_k
    }
    #[getter]
    fn w_j(&self) -> u64 {
        self.inner.triple.w_j
    }
    #[getter]
    fn d0(&self) -> f64 {
        self.inner.d0
    }
    #[getter]
    fn d1(&self) -> Option<f64> {
        self.inner.d1
    }
    #[getter]
    fn d2(&self) -> Option<f64> {
        self.inner.d2
    }
    #[getter]
    fn d3(&self) -> Option<f64> {
        self.inner.d3
    }
    #[getter]
    fn d4(&self) -> Option<f64> {
        self.inner.d4
    }
    #[getter]
    fn d_f(&self) -> f64 {
        self.inner.d_f
    }
    #[getter]
    fn r_k(&self) -> f64 {
        self.inner.r_k
    }
    #[getter]
    fn c_f(&self) -> u64 {
        self.inner.c_f
    }
    #[getter]
    fn c_max(&self) -> u64 {
        self.inner.c_max
    }
    #[getter]
    fn b_f(&self) -> f64 {
        self.inner.b_f
    }
    #[getter]
    fn top_reference(&self) -> &str {
        &self.inner.top_reference
    }
    #[getter]
    fn d1_degraded(&self) -> bool {
        self.inner.d1_degraded
    }

    fn approx_d(&self) -> f64 {
        self.inner.approx_d()
    }

    fn __repr__(&self) -> String {
        format!(
            "Report(focal={:?}, d0={}, d_f={}, b_f={})",
            self.inner.focal, self.inner.d0, self.inner.d_f, self.inner.b_f
        )
    }
}

fn variant_config(
    variant: &str,
    popular_threshold: u32,
    popular_quartile: bool,
    time_filter: bool,
    lifetime_c_max: bool,
    min_citations: u32,
    min_references: u32,
) -> PyResult<VariantConfig> {
    Ok(VariantConfig {
        variant: match variant {
            "all" => VariantSelection::All,
            v => VariantSelection::Only(parse::<Variant>(v)?),
        },
        popular: if popular_quartile {
            PopularRule::TopQuartile
        } else {
            PopularRule::Threshold(popular_threshold)
        },
        time_filter,
        lifetime_c_max,
        min_references,
        min_citations,
    })
}

/// Reports for every eligible paper, in graph order.
#[pyfunction]
#[pyo3(signature = (graph, variant = "all", popular_threshold = 24, popular_quartile = false, time_filter = true,
                    lifetime_c_max = true, min_citations = 1, min_references = 1, threads = 0))]
#[allow(clippy::too_many_arguments)]
fn metrics(
    py: Python<'_>,
    graph: &PyGraph,
    variant: &str,
    popular_threshold: u32,
    popular_quartile: bool,
    time_filter: bool,
    lifetime_c_max: bool,
    min_citations: u32,
    min_references: u32,
    threads: usize,
) -> PyResult<Vec<PyReport>> {
    let config = variant_config(
        variant,
        popular_threshold,
        popular_quartile,
        time_filter,
        lifetime_c_max,
        min_citations,
        min_references,
    )?;
    let out = py
        .detach(|| displacement::batch_reports(&graph.inner, &config, threads))
        .map_err(py_err)?;
    Ok(out.reports.into_iter().map(|inner| PyReport { inner }).collect())
}

/// Report for a single paper; raises if it is ineligible.
#[pyfunction]
#[pyo3(signature = (graph, id, popular_threshold = 24, time_filter = true))]
fn report(graph: &PyGraph, id: &str, popular_threshold: u32, time_filter: bool) -> PyResult<PyReport> {
    let config = VariantConfig {
        popular: PopularRule::Threshold(popular_threshold),
        time_filter,
        ..VariantConfig::default()
    };
    let v = graph.node(id)?;
    displacement::decompose(&graph.inner, v, &config)
        .map(|inner| PyReport { inner })
        .map_err(py_err)
}

#[pyfunction]
fn d_index(n_i: u64, n_j: u64, n_k: u64) -> PyResult<f64> {
    displacement::d_index(&displacement::CitationTriple::new(n_i, n_j, n_k), Variant::D0).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (counts, drop_zeros = false))]
fn fit_zipf<'py>(py: Python<'py>, counts: Vec<f64>, drop_zeros: bool) -> PyResult<Bound<'py, PyDict>> {
    let f = zipf::fit_zipf_with(&counts, zipf::ZipfOptions { drop_zeros }).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("a", f.a)?;
    d.set_item("b", f.b)?;
    d.set_item("c", f.c)?;
    d.set_item("n_refs", f.n_refs)?;
    d.set_item("r2_log", f.r2_log)?;
    d.set_item("ratio_empirical", f.ratio_empirical)?;
    d.set_item("ratio_theoretical", f.ratio_theoretical)?;
    d.set_item("k_coefficient", f.k_coefficient)?;
    Ok(d)
}

#[pyfunction]
fn ratio_theoretical(a: f64, b: f64) -> PyResult<f64> {
    zipf::ratio_theoretical(a, b).map_err(py_err)
}

/// `(anchor, members)` pairs, largest pool first.
#[pyfunction]
#[pyo3(signature = (graph, reports, min_citations = 100, min_d = 0.2, variant = "d0", min_pool_size = 2))]
fn find_pools(
    graph: &PyGraph,
    reports: Vec<PyRef<'_, PyReport>>,
    min_citations: u64,
    min_d: f64,
    variant: &str,
    min_pool_size: usize,
) -> PyResult<Vec<(String, Vec<String>)>> {
    let reports: Vec<DisplacementReport> = reports.iter().map(|r| r.inner.clone()).collect();
    let criteria = multiples::PoolCriteria {
        min_citations,
        min_d,
        variant: parse(variant)?,
        min_pool_size,
    };
    let pools = multiples::find_pools(&graph.inner, &reports, &criteria).map_err(py_err)?;
    Ok(pools.into_iter().map(|p| (p.anchor, p.members)).collect())
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::PowerLaw => "power_law",
        Verdict::Poisson => "poisson",
        Verdict::Indeterminate => "indeterminate",
    }
}

/// Power law vs truncated Poisson on `samples`.
#[pyfunction]
#[pyo3(signature = (samples, truncation, significance = 0.05, support = "observed"))]
fn fit_distribution<'py>(
    py: Python<'py>,
    samples: Vec<u64>,
    truncation: u64,
    significance: f64,
    support: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let support = match support {
        "observed" => Support::Observed,
        "ks_xmin" | "ks-xmin" => Support::KsXmin,
        s => return Err(PyValueError::new_err(format!("unknown support `{s}`"))),
    };
    let opts = CompareOptions {
        truncation,
        significance,
        support,
    };
    let fit = py.detach(|| distfit::fit_distribution(&samples, &opts)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("verdict", verdict_name(fit.comparison.verdict))?;
    d.set_item("llr", fit.comparison.llr)?;
    d.set_item("z", fit.comparison.z)?;
    d.set_item("p_value", fit.comparison.p_value)?;
    d.set_item("alpha", fit.power_law.alpha)?;
    d.set_item("x_min", fit.power_law.x_min)?;
    d.set_item("alpha_on_support", fit.power_law_on_support.alpha)?;
    d.set_item("lambda", fit.poisson.lambda)?;
    d.set_item("support_floor", fit.support_floor)?;
    d.set_item("n_support", fit.n_support)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (n, alpha, x_min = 1, seed = 0))]
fn powerlaw_samples(n: usize, alpha: f64, x_min: u64, seed: u64) -> PyResult<Vec<u64>> {
    if alpha <= 1.0 || x_min < 1 {
        return Err(PyValueError::new_err("need alpha > 1 and x_min >= 1"));
    }
    Ok(synth::powerlaw_samples(n, alpha, x_min, seed))
}

#[pyfunction]
#[pyo3(signature = (f = 292, l = 2))]
fn null_overlap_probability(f: u32, l: u32) -> PyResult<f64> {
    overlap::null_overlap_probability(f, l).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (graph, reports, d_cutoff = 0.21, fields = 292, labels_per_paper = 2))]
fn empirical_overlap<'py>(
    py: Python<'py>,
    graph: &PyGraph,
    reports: Vec<PyRef<'_, PyReport>>,
    d_cutoff: f64,
    fields: u32,
    labels_per_paper: u32,
) -> PyResult<Bound<'py, PyDict>> {
    let reports: Vec<DisplacementReport> = reports.iter().map(|r| r.inner.clone()).collect();
    let taxonomy = overlap::FieldTaxonomy {
        f: fields,
        l: labels_per_paper,
    };
    let r = overlap::empirical_overlap(&graph.inner, &reports, d_cutoff, taxonomy).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("p_empirical", r.p_empirical)?;
    d.set_item("p_null", r.p_null)?;
    d.set_item("ratio", r.ratio)?;
    d.set_item("n_pairs", r.n_pairs)?;
    d.set_item("n_overlapping", r.n_overlapping)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (focal_title, focal_abstract, ref_title, ref_abstract, mode = "zero_shot"))]
fn build_prompt(
    focal_title: &str,
    focal_abstract: &str,
    ref_title: &str,
    ref_abstract: &str,
    mode: &str,
) -> PyResult<String> {
    let req = ClassificationRequest::new(focal_title, focal_abstract, ref_title, ref_abstract, parse::<PromptMode>(mode)?);
    classifier::build_prompt(&req).map_err(py_err)
}

#[pymodule]
fn displace(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("SNAPSHOT_FORMAT_VERSION", displace_core::SNAPSHOT_FORMAT_VERSION)?;
    m.add("DisplaceError", m.py().get_type::<DisplaceError>())?;
    m.add_class::<PyGraph>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(report, m)?)?;
    m.add_function(wrap_pyfunction!(d_index, m)?)?;
    m.add_function(wrap_pyfunction!(fit_zipf, m)?)?;
    m.add_function(wrap_pyfunction!(ratio_theoretical, m)?)?;
    m.add_function(wrap_pyfunction!(find_pools, m)?)?;
    m.add_function(wrap_pyfunction!(fit_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(powerlaw_samples, m)?)?;
    m.add_function(wrap_pyfunction!(null_overlap_probability, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_overlap, m)?)?;
    m.add_function(wrap_pyfunction!(build_prompt, m)?)?;
    Ok(())
}
