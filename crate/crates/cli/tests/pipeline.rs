use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use displace_core::classifier::mock::{MockEndpoint, MockReply, MockServer};
use displace_core::corpus::write_corpus;
use displace_core::synth::{planted_pools_corpus, PlantedPoolsConfig};
use serde_json::Value;

fn displace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_displace"))
        .args(args)
        .env_remove("DISPLACE_LLM_API_KEY")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = displace(args);
    assert!(
        out.status.success(),
        "displace {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

fn json(path: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn version_names_snapshot_format() {
    let out = ok(&["--version"]);
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(s.contains(env!("CARGO_PKG_VERSION")));
    assert!(s.contains("snapshot format 1"));
}

#[test]
fn ingest_filters_doc_types() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("papers.jsonl"),
        concat!(
            r#"{"id": "F", "year": 2000, "doc_type": "journal-article"}"#,
            "\n",
            r#"{"id": "A", "year": 2005, "doc_type": "journal-article"}"#,
            "\n",
            r#"{"id": "B", "year": 1990, "doc_type": "book"}"#,
            "\n"
        ),
    )
    .unwrap();
    fs::write(dir.path().join("edges.tsv"), "A\tF\nF\tB\n").unwrap();
    let d = dir.path();
    let out = ok(&[
        "ingest",
        "--papers",
        &p(d, "papers.jsonl"),
        "--edges",
        &p(d, "edges.tsv"),
        "--out",
        &p(d, "g.disp"),
    ]);
    let stats: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stats["papers_kept"], 2);
    assert_eq!(stats["edges_kept"], 1);
    let manifest = json(&p(d, "g.disp.manifest.json"));
    assert_eq!(manifest["subcommand"], "ingest");
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 2);
    assert_eq!(manifest["snapshot_format_version"], 1);
    assert!(fs::read(p(d, "g.disp")).unwrap().starts_with(b"DISP\x01"));
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("papers.jsonl"), "{\"id\": \"F\", \"year\": \n").unwrap();
    fs::write(d.join("edges.tsv"), "").unwrap();
    let out = displace(&[
        "ingest",
        "--papers",
        &p(d, "papers.jsonl"),
        "--edges",
        &p(d, "edges.tsv"),
        "--out",
        &p(d, "g.disp"),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains(":1:"));
    assert!(out.stdout.is_empty());

    fs::write(d.join("empty.jsonl"), "").unwrap();
    let out = displace(&["report", "--reports", &p(d, "empty.jsonl"), "--out-dir", &p(d, "rep")]);
    assert!(!out.status.success());

    fs::write(d.join("g.disp"), b"DISP\x07garbage").unwrap();
    let out = displace(&["metrics", "--snapshot", &p(d, "g.disp"), "--out", &p(d, "r.jsonl")]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("incompatible snapshot"));
}

fn planted(dir: &Path) -> (PathBuf, displace_core::synth::PlantedCorpus) {
    let corpus = planted_pools_corpus(&PlantedPoolsConfig::default()).unwrap();
    let papers = BufWriter::new(File::create(dir.join("papers.jsonl")).unwrap());
    let edges = BufWriter::new(File::create(dir.join("edges.tsv")).unwrap());
    write_corpus(&corpus.graph, papers, edges).unwrap();
    (dir.to_path_buf(), corpus)
}

#[test]
fn planted_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let (d, corpus) = planted(dir.path());
    let d = d.as_path();
    ok(&[
        "ingest",
        "--papers",
        &p(d, "papers.jsonl"),
        "--edges",
        &p(d, "edges.tsv"),
        "--out",
        &p(d, "g.disp"),
    ]);
    ok(&["metrics", "--snapshot", &p(d, "g.disp"), "--out", &p(d, "reports.jsonl")]);
    ok(&[
        "--threads",
        "1",
        "metrics",
        "--snapshot",
        &p(d, "g.disp"),
        "--out",
        &p(d, "reports1.jsonl"),
    ]);
    assert_eq!(
        fs::read(p(d, "reports.jsonl")).unwrap(),
        fs::read(p(d, "reports1.jsonl")).unwrap(),
        "metrics output depends on the thread count"
    );

    ok(&[
        "multiples",
        "--snapshot",
        &p(d, "g.disp"),
        "--reports",
        &p(d, "reports.jsonl"),
        "--out",
        &p(d, "pools.csv"),
        "--histogram",
        &p(d, "hist.csv"),
    ]);
    let hist = fs::read_to_string(p(d, "hist.csv")).unwrap();
    let mut expected = String::from("size,count\n");
    for (s, c) in &corpus.histogram {
        expected.push_str(&format!("{s},{c}\n"));
    }
    assert_eq!(hist, expected);
    let pools = fs::read_to_string(p(d, "pools.csv")).unwrap();
    assert!(pools.starts_with("anchor_id,size,member_ids,min_year,max_year\n"));
    assert_eq!(pools.lines().count(), corpus.pools.len() + 1);

    ok(&[
        "distfit",
        "--input",
        &p(d, "hist.csv"),
        "--truncation",
        "2",
        "--out",
        &p(d, "fit.json"),
    ]);
    let fit = json(&p(d, "fit.json"));
    assert_eq!(fit["comparison"]["verdict"], "power_law");
    assert!(fit["comparison"]["p_value"].as_f64().unwrap() < 0.05);

    ok(&[
        "overlap",
        "--snapshot",
        &p(d, "g.disp"),
        "--reports",
        &p(d, "reports.jsonl"),
        "--out",
        &p(d, "overlap.json"),
    ]);
    let ov = json(&p(d, "overlap.json"));
    assert_eq!(ov["p_empirical"].as_f64().unwrap(), 1.0);

    ok(&["report", "--reports", &p(d, "reports.jsonl"), "--out-dir", &p(d, "rep")]);
    let summary = json(&p(d, "rep/summary.json"));
    assert!(summary["n_reports"].as_u64().unwrap() > 0);
    assert!(fs::read_to_string(p(d, "rep/d_f_histogram.csv")).unwrap().starts_with("bin_lo,bin_hi,count\n"));
    ok(&["report", "--reports", &p(d, "reports.jsonl"), "--out-dir", &p(d, "rep2")]);
    for f in ["summary.json", "d_f_histogram.csv", "d0_histogram.csv", "log_b_f_histogram.csv"] {
        assert_eq!(fs::read(d.join("rep").join(f)).unwrap(), fs::read(d.join("rep2").join(f)).unwrap());
    }

    ok(&[
        "zipf",
        "--snapshot",
        &p(d, "g.disp"),
        "--sample",
        "50",
        "--seed",
        "3",
        "--out",
        &p(d, "zipf.csv"),
    ]);
    let z = fs::read_to_string(p(d, "zipf.csv")).unwrap();
    assert!(z.starts_with("paper_id,a,b,c,r2_log,ratio_empirical,ratio_theoretical\n"));
    ok(&[
        "zipf",
        "--snapshot",
        &p(d, "g.disp"),
        "--sample",
        "50",
        "--seed",
        "3",
        "--out",
        &p(d, "zipf2.csv"),
    ]);
    assert_eq!(z, fs::read_to_string(p(d, "zipf2.csv")).unwrap());
}

#[test]
fn classify_against_mock_server() {
    let server = MockServer::start(MockEndpoint::from_fn(|prompt| {
        if prompt.contains("Turing") {
            MockReply::Logprobs(vec![("1".into(), 0.86f64.ln()), ("2".into(), 0.14f64.ln())])
        } else {
            MockReply::Logprobs(vec![("2".into(), 0.63f64.ln()), ("1".into(), 0.37f64.ln())])
        }
    }))
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let pairs = [
        r#"{"id": "turing", "focal_title": "On computable numbers (Turing)", "focal_abstract": "machines", "ref_title": "A note on the Entscheidungsproblem", "ref_abstract": "lambda calculus", "focal_year": 1937, "ref_year": 1936}"#,
        r#"{"id": "ws", "focal_title": "Collective dynamics", "focal_abstract": "networks", "ref_title": "The small world problem", "ref_abstract": "chains"}"#,
        r#"{"id": "bad", "focal_title": "x", "focal_abstract": "", "ref_title": "y", "ref_abstract": "z"}"#,
    ];
    fs::write(d.join("pairs.jsonl"), pairs.join("\n") + "\n").unwrap();
    let args = [
        "classify",
        "--endpoint",
        &server.url(),
        "--model",
        "mock",
        "--pairs",
        &p(d, "pairs.jsonl"),
        "--max-in-flight",
        "2",
        "--out",
        &p(d, "results.jsonl"),
    ];
    let out = displace(&args);
    assert!(!out.status.success(), "a failed request must make the run fail");
    let lines: Vec<Value> = fs::read_to_string(p(d, "results.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0]["id"], "turing");
    assert_eq!(lines[0]["p_theory"].as_f64().unwrap(), 0.86);
    assert_eq!(lines[0]["year_gap"], 1);
    assert_eq!(lines[1]["chosen_option"], 2);
    assert!(lines[2]["error"].as_str().unwrap().contains("paper abstract"));
    assert_eq!(server.endpoint().calls(), 2);

    let out = displace(&args);
    assert!(!out.status.success());
    assert_eq!(server.endpoint().calls(), 2, "journaled requests were re-sent");
    assert_eq!(
        fs::read_to_string(p(d, "results.jsonl")).unwrap().lines().count(),
        3
    );
    let manifest = json(&p(d, "results.jsonl.manifest.json"));
    assert_eq!(manifest["flags"]["command"]["classify"]["mode"], "zero_shot");
}
