use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use displace_core::classifier::{
    classify_batch, BatchOptions, ClassificationRequest, HttpEndpoint, JournalMode, RetryPolicy,
};
use displace_core::corpus::{ingest_files, load_snapshot, save_snapshot, CorpusFilter, IngestOptions, UnknownEdgePolicy};
use displace_core::displacement::{batch_reports, for_each_report_chunk, PopularRule, VariantSelection};
use displace_core::distfit::{fit_distribution, load_external_histogram, CompareOptions};
use displace_core::fmt::{real, round_sig12};
use displace_core::multiples::{find_pools, pool_size_histogram, PoolCriteria};
use displace_core::overlap::{empirical_overlap, FieldTaxonomy};
use displace_core::report::{summarize, Histogram};
use displace_core::zipf::{fit_paper, sample_papers, ZipfOptions, ZipfSummary};
use displace_core::{CitationGraph, DisplacementReport, VariantConfig};

use crate::manifest::{manifest_path, Recorder};
use crate::{
    ClassifyArgs, Cli, Command, DistfitArgs, IngestArgs, MetricsArgs, MultiplesArgs, OverlapArgs, ReportArgs,
    ZipfArgs,
};

pub fn run(cli: &Cli) -> Result<ExitCode> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let flags = serde_json::to_value(&cli.command)?;
    let flags = json!({"threads": cli.threads, "command": flags});
    match &cli.command {
        Command::Ingest(a) => ingest(a, flags),
        Command::Metrics(a) => metrics(a, cli.threads, flags),
        Command::Zipf(a) => zipf(a, flags),
        Command::Multiples(a) => multiples(a, cli.threads, flags),
        Command::Distfit(a) => distfit(a, flags),
        Command::Overlap(a) => overlap(a, cli.threads, flags),
        Command::Classify(a) => classify(a, flags),
        Command::Report(a) => report(a, flags),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

/// Rounds every non-integer number to 12 significant digits.
fn round_reals(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|x| serde_json::Number::from_f64(round_sig12(x)))
            .map_or(Value::Null, Value::Number),
        Value::Array(a) => Value::Array(a.into_iter().map(round_reals).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, round_reals(v))).collect()),
        other => other,
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let v = round_reals(serde_json::to_value(value)?);
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, &v)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

fn read_reports(path: &Path) -> Result<Vec<DisplacementReport>> {
    let r = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).with_context(|| format!("{}:{}: malformed report", path.display(), i + 1))?,
        );
    }
    Ok(out)
}

fn graph_and_reports(
    snapshot: &Path,
    reports: Option<&Path>,
    threads: usize,
) -> Result<(CitationGraph, Vec<DisplacementReport>)> {
    let graph = load_snapshot(snapshot).with_context(|| format!("loading {}", snapshot.display()))?;
    let reports = match reports {
        Some(p) => read_reports(p)?,
        None => batch_reports(&graph, &VariantConfig::default(), threads)?.reports,
    };
    Ok((graph, reports))
}

fn inputs<'a>(required: &[&'a Path], optional: Option<&'a PathBuf>) -> Vec<&'a Path> {
    required.iter().copied().chain(optional.map(PathBuf::as_path)).collect()
}

fn ingest(a: &IngestArgs, flags: Value) -> Result<ExitCode> {
    let rec = Recorder::new("ingest", flags, &[&a.papers, &a.edges])?;
    let opts = IngestOptions {
        filter: CorpusFilter {
            journal_only: !a.all_doc_types,
            min_references: a.min_references,
            min_citations: a.min_citations,
            year_range: a.year_from.zip(a.year_to),
            ..CorpusFilter::default()
        },
        unknown_edges: if a.strict_edges {
            UnknownEdgePolicy::Strict
        } else {
            UnknownEdgePolicy::Skip
        },
    };
    let (graph, stats) = ingest_files(&a.papers, &a.edges, &opts)?;
    save_snapshot(&graph, &a.out)?;
    println!("{}", serde_json::to_string_pretty(&stats)?);
    if stats.unknown_endpoint > 0 {
        eprintln!("warning: skipped {} edges naming unknown papers", stats.unknown_endpoint);
    }
    rec.finish(&manifest_path(&a.out), vec![a.out.clone()])?;
    Ok(ExitCode::SUCCESS)
}

fn metrics(a: &MetricsArgs, threads: usize, flags: Value) -> Result<ExitCode> {
    let rec = Recorder::new("metrics", flags, &[&a.snapshot])?;
    let variant = match a.variant.as_str() {
        "all" => VariantSelection::All,
        v => VariantSelection::Only(v.parse().map_err(anyhow::Error::msg)?),
    };
    let config = VariantConfig {
        variant,
        popular: if a.popular_quartile {
            PopularRule::TopQuartile
        } else {
            PopularRule::Threshold(a.popular_threshold)
        },
        time_filter: !a.no_time_filter,
        lifetime_c_max: !a.windowed_c_max,
        min_references: a.min_references,
        min_citations: a.min_citations,
    };
    let graph = load_snapshot(&a.snapshot)?;
    let mut w = create(&a.out)?;
    let (mut written, mut skipped) = (0usize, 0usize);
    for_each_report_chunk(&graph, &config, threads, 1 << 15, |chunk, s| {
        skipped += s;
        for r in &chunk {
            serde_json::to_writer(&mut w, r).map_err(std::io::Error::other)?;
            w.write_all(b"\n")?;
        }
        written += chunk.len();
        Ok(())
    })?;
    w.flush()?;
    eprintln!("{written} reports written, {skipped} papers ineligible");
    rec.finish(&manifest_path(&a.out), vec![a.out.clone()])?;
    Ok(ExitCode::SUCCESS)
}

fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

fn zipf(a: &ZipfArgs, flags: Value) -> Result<ExitCode> {
    let rec = Recorder::new("zipf", flags, &[&a.snapshot])?;
    let graph = load_snapshot(&a.snapshot)?;
    let papers = sample_papers(&graph, a.sample, a.min_refs, a.seed);
    let options = ZipfOptions {
        drop_zeros: a.drop_zeros,
    };
    let fits: Vec<_> = papers
        .par_iter()
        .map(|&v| (v, fit_paper(&graph, v, options)))
        .collect();
    let mut w = csv_writer(&a.out)?;
    w.write_record(["paper_id", "a", "b", "c", "r2_log", "ratio_empirical", "ratio_theoretical"])?;
    let mut ok = Vec::new();
    let mut failed = 0;
    for (v, fit) in fits {
        match fit {
            Ok(f) => {
                w.write_record([
                    graph.external_id(v).to_string(),
                    real(f.a),
                    real(f.b),
                    real(f.c),
                    real(f.r2_log),
                    real(f.ratio_empirical),
                    opt_real(f.ratio_theoretical),
                ])?;
                ok.push(f);
            }
            Err(e) => {
                failed += 1;
                log::debug!("{}: {e}", graph.external_id(v));
            }
        }
    }
    w.flush()?;
    eprintln!("{} fits written, {failed} papers could not be fitted", ok.len());
    let mut outputs = vec![a.out.clone()];
    if let Some(path) = &a.summary {
        write_json(path, &ZipfSummary::from_fits(&ok))?;
        outputs.push(path.clone());
    }
    rec.finish(&manifest_path(&a.out), outputs)?;
    Ok(ExitCode::SUCCESS)
}

fn multiples(a: &MultiplesArgs, threads: usize, flags: Value) -> Result<ExitCode> {
    let rec = Recorder::new("multiples", flags, &inputs(&[&a.snapshot], a.reports.as_ref()))?;
    let (graph, reports) = graph_and_reports(&a.snapshot, a.reports.as_deref(), threads)?;
    let criteria = PoolCriteria {
        min_citations: a.min_citations,
        min_d: a.min_d,
        variant: a.variant,
        min_pool_size: a.min_pool_size,
    };
    let pools = find_pools(&graph, &reports, &criteria)?;
    let mut w = csv_writer(&a.out)?;
    w.write_record(["anchor_id", "size", "member_ids", "min_year", "max_year"])?;
    for p in &pools {
        w.write_record([
            p.anchor.clone(),
            p.size.to_string(),
            p.members.join(";"),
            p.span_years.0.to_string(),
            p.span_years.1.to_string(),
        ])?;
    }
    w.flush()?;
    let mut outputs = vec![a.out.clone()];
    if let Some(path) = &a.histogram {
        let mut h = csv_writer(path)?;
        h.write_record(["size", "count"])?;
        for (size, count) in pool_size_histogram(&pools) {
            h.write_record([size.to_string(), count.to_string()])?;
        }
        h.flush()?;
        outputs.push(path.clone());
    }
    eprintln!("{} pools", pools.len());
    rec.finish(&manifest_path(&a.out), outputs)?;
    Ok(ExitCode::SUCCESS)
}

fn distfit(a: &DistfitArgs, flags: Value) -> Result<ExitCode> {
    let rec = Recorder::new("distfit", flags, &[&a.input])?;
    let samples = load_external_histogram(&a.input)?;
    let options = CompareOptions {
        truncation: a.truncation,
        significance: a.significance,
        support: a.support,
    };
    let fit = fit_distribution(&samples, &options)?;
    write_json(&a.out, &fit)?;
    eprintln!(
        "verdict: {:?} (llr {}, p {})",
        fit.comparison.verdict,
        real(fit.comparison.llr),
        real(fit.comparison.p_value)
    );
    rec.finish(&manifest_path(&a.out), vec![a.out.clone()])?;
    Ok(ExitCode::SUCCESS)
}

fn overlap(a: &OverlapArgs, threads: usize, flags: Value) -> Result<ExitCode> {
    let rec = Recorder::new("overlap", flags, &inputs(&[&a.snapshot], a.reports.as_ref()))?;
    let (graph, reports) = graph_and_reports(&a.snapshot, a.reports.as_deref(), threads)?;
    let taxonomy = FieldTaxonomy {
        f: a.fields,
        l: a.labels_per_paper,
    };
    let result = empirical_overlap(&graph, &reports, a.d_cutoff, taxonomy)?;
    write_json(&a.out, &result)?;
    rec.finish(&manifest_path(&a.out), vec![a.out.clone()])?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Deserialize)]
struct PairLine {
    #[serde(default)]
    id: Option<String>,
    focal_title: String,
    focal_abstract: String,
    ref_title: String,
    ref_abstract: String,
    #[serde(default)]
    focal_year: Option<i32>,
    #[serde(default)]
    ref_year: Option<i32>,
}

fn classify(a: &ClassifyArgs, flags: Value) -> Result<ExitCode> {
    let rec = Recorder::new("classify", flags, &[&a.pairs])?;
    let r = BufReader::new(File::open(&a.pairs).with_context(|| format!("opening {}", a.pairs.display()))?);
    let mut pairs = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let p: PairLine =
            serde_json::from_str(&line).with_context(|| format!("{}:{}: malformed pair", a.pairs.display(), i + 1))?;
        pairs.push(p);
    }
    let requests: Vec<ClassificationRequest> = pairs
        .iter()
        .map(|p| {
            ClassificationRequest::new(
                p.focal_title.clone(),
                p.focal_abstract.clone(),
                p.ref_title.clone(),
                p.ref_abstract.clone(),
                a.mode,
            )
        })
        .collect();

    let endpoint = HttpEndpoint::from_env(a.endpoint.clone(), Duration::from_secs(a.timeout_secs));
    let journal = a.journal.clone().unwrap_or_else(|| {
        let mut s = a.out.as_os_str().to_owned();
        s.push(".journal");
        PathBuf::from(s)
    });
    let opts = BatchOptions {
        max_in_flight: a.max_in_flight,
        retry: RetryPolicy {
            max_attempts: a.max_attempts.max(1),
            ..RetryPolicy::default()
        },
        journal: Some((
            journal.clone(),
            if a.restart {
                JournalMode::Restart
            } else {
                JournalMode::Resume
            },
        )),
        cancel: None,
    };
    let mut w = create(&a.out)?;
    let summary = classify_batch(&endpoint, &a.model, &requests, &opts, |item| {
        let p = &pairs[item.index];
        let mut line = json!({"index": item.index, "id": p.id});
        match &item.outcome {
            Ok(r) => {
                line["p_theory"] = json!(round_sig12(r.p_theory));
                line["chosen_option"] = json!(r.chosen_option);
                line["raw_token_logprobs"] = round_reals(json!(r.raw_token_logprobs));
                line["model_id"] = json!(r.model_id);
            }
            Err(e) => line["error"] = json!(e.to_string()),
        }
        if let (Some(f), Some(r)) = (p.focal_year, p.ref_year) {
            line["year_gap"] = json!(f - r);
        }
        serde_json::to_writer(&mut w, &line).map_err(std::io::Error::other)?;
        w.write_all(b"\n")?;
        Ok(())
    })?;
    w.flush()?;
    eprintln!(
        "{} classified, {} resumed from journal, {} failed",
        summary.succeeded, summary.resumed, summary.failed
    );
    rec.finish(&manifest_path(&a.out), vec![a.out.clone(), journal])?;
    if summary.failed > 0 {
        eprintln!("error: {} requests failed; rerun to retry them", summary.failed);
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn write_histogram(path: &Path, h: &Histogram) -> Result<()> {
    std::fs::write(path, h.to_csv()).with_context(|| format!("writing {}", path.display()))
}

fn report(a: &ReportArgs, flags: Value) -> Result<ExitCode> {
    let rec = Recorder::new("report", flags, &[&a.reports])?;
    let reports = read_reports(&a.reports)?;
    if reports.is_empty() {
        bail!("{} holds no reports", a.reports.display());
    }
    let bundle = summarize(&reports)?;
    std::fs::create_dir_all(&a.out_dir)?;
    let out = |name: &str| a.out_dir.join(name);
    write_json(&out("summary.json"), &bundle.summary)?;
    write_histogram(&out("d_f_histogram.csv"), &bundle.d_f_histogram)?;
    write_histogram(&out("d0_histogram.csv"), &bundle.d0_histogram)?;
    write_histogram(&out("log_b_f_histogram.csv"), &bundle.log_b_f_histogram)?;
    let outputs = ["summary.json", "d_f_histogram.csv", "d0_histogram.csv", "log_b_f_histogram.csv"]
        .map(out)
        .to_vec();
    rec.finish(&out("manifest.json"), outputs)?;
    Ok(ExitCode::SUCCESS)
}
