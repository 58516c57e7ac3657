//! End-to-end runs of the `pagefidelity` binary.

use std::path::Path;
use std::process::{Command, Output};

use pagefidelity::batch::BatchReport;
use pagefidelity::cli::{
    EXIT_EMBEDDER_UNAVAILABLE, EXIT_OK, EXIT_RENDERER_UNAVAILABLE, EXIT_RENDER_TIMEOUT, EXIT_USAGE,
};
use pagefidelity::metrics::MetricReport;
use pagefidelity::render::find_chrome;
use pagefidelity::synth;
use pagefidelity::winrate::UNCALIBRATED;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pagefidelity"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_pages(dir: &Path, pages: &[(&str, &str)]) {
    std::fs::create_dir_all(dir).unwrap();
    for (name, html) in pages {
        std::fs::write(dir.join(format!("{name}.html")), html).unwrap();
    }
}

fn config(dir: &Path, toml: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, toml).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn curate_counts_verdicts() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = synth::corpus(2, 9);
    let (a, b) = (corpus[0].html.as_str(), corpus[1].html.as_str());
    write_pages(&tmp.path().join("in"), &[("a", a), ("b", b), ("c", a)]);
    let out = run(&["curate", s(&tmp.path().join("in")), s(&tmp.path().join("out"))]);
    assert_eq!(code(&out), EXIT_OK, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["counts"]["ok"], 2);
    assert_eq!(summary["counts"]["duplicate"], 1);
    assert_eq!(summary["written"], serde_json::json!(["a.html", "b.html"]));
    assert!(tmp.path().join("out/rick.jpg").is_file());
}

#[test]
fn stats_reports_every_page() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = synth::corpus(3, 9);
    write_pages(&tmp.path().join("in"), &corpus.iter().map(|p| (p.name.as_str(), p.html.as_str())).collect::<Vec<_>>());
    let out = run(&["stats", s(&tmp.path().join("in"))]);
    assert_eq!(code(&out), EXIT_OK);
    let stats: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stats["pages"].as_array().unwrap().len(), 3);
    assert!(stats["mean_total_tags"].as_f64().unwrap() > 5.0);
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["bogus"])), EXIT_USAGE);
    assert_eq!(code(&run(&["evaluate", "/nonexistent/ref", "/nonexistent/gen"])), EXIT_USAGE);
    assert_eq!(code(&run(&["--config", "/nonexistent.toml", "stats", "."])), EXIT_USAGE);
    let bad = config(tmp.path(), "no_such_key = 1\n");
    assert_eq!(code(&run(&["--config", &bad, "stats", "."])), EXIT_USAGE);
    write_pages(&tmp.path().join("ref"), &[("a", "<html><body><p>x</p></body></html>")]);
    let out = run(&["generate", s(&tmp.path().join("ref")), s(&tmp.path().join("gen")), "--strategy", "self-revision"]);
    assert_eq!(code(&out), EXIT_USAGE);
    assert!(String::from_utf8_lossy(&out.stderr).contains("initial solution"));
}

fn reports(path: &Path, scores: &[[f64; 5]]) {
    let reports: Vec<MetricReport> = scores
        .iter()
        .enumerate()
        .map(|(i, s)| MetricReport::from_scores(format!("p{i}"), format!("p{i}"), *s))
        .collect();
    std::fs::write(path, serde_json::to_string(&reports).unwrap()).unwrap();
}

#[test]
fn winrate_simulation() {
    let tmp = tempfile::tempdir().unwrap();
    let (same_a, same_b, low) = (tmp.path().join("a.json"), tmp.path().join("b.json"), tmp.path().join("low.json"));
    let scores = [[0.9, 0.8, 0.7, 0.9, 0.95], [0.6, 0.7, 0.8, 0.5, 0.9], [0.8, 0.9, 0.85, 0.7, 0.92]];
    reports(&same_a, &scores);
    reports(&same_b, &scores);
    reports(&low, &scores.map(|s| s.map(|v| v * 0.5)));

    let out_path = tmp.path().join("wr.json");
    let out = run(&["winrate", "simulate", s(&same_a), s(&same_b), "--out", s(&out_path)]);
    assert_eq!(code(&out), EXIT_OK);
    assert!(String::from_utf8_lossy(&out.stdout).contains("win rate 1.0000 (3 of 3 pages)"));
    assert!(String::from_utf8_lossy(&out.stderr).contains(UNCALIBRATED));
    let wr: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(wr["rate"], 1.0);
    assert!(wr["flags"].as_array().unwrap().iter().any(|f| f == UNCALIBRATED));

    let out = run(&["winrate", "simulate", s(&low), s(&same_a)]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("win rate 0.0000 (0 of 3 pages)"));
}

#[test]
fn winrate_fit_writes_a_usable_model() {
    let tmp = tempfile::tempdir().unwrap();
    let pairs: Vec<serde_json::Value> = (0..40)
        .map(|i| {
            let hi = 0.5 + f64::from(i % 7) / 20.0;
            let lo = 0.3 + f64::from(i % 5) / 20.0;
            // first wins when its block score is higher, except for a few noisy labels
            let win = (i % 2 == 0) != (i % 9 == 0);
            let (a, b) = if i % 2 == 0 { (hi, lo) } else { (lo, hi) };
            serde_json::json!({
                "first": MetricReport::from_scores("p", "x", [a, 0.5, a, 0.5 + f64::from(i % 3) / 10.0, 0.9]),
                "second": MetricReport::from_scores("p", "y", [b, 0.5, b, 0.6, 0.9 - f64::from(i % 4) / 50.0]),
                "win": win,
            })
        })
        .collect();
    let pairs_path = tmp.path().join("pairs.json");
    std::fs::write(&pairs_path, serde_json::to_string(&pairs).unwrap()).unwrap();
    let model = tmp.path().join("model.json");
    let out = run(&["winrate", "fit", s(&pairs_path), "--out", s(&model)]);
    assert_eq!(code(&out), EXIT_OK, "{}", String::from_utf8_lossy(&out.stderr));

    let (a, b) = (tmp.path().join("a.json"), tmp.path().join("b.json"));
    reports(&a, &[[0.9, 0.5, 0.9, 0.6, 0.9]]);
    reports(&b, &[[0.3, 0.5, 0.3, 0.6, 0.9]]);
    let out = run(&["winrate", "simulate", s(&a), s(&b), "--model", s(&model)]);
    assert_eq!(code(&out), EXIT_OK);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("win rate 1.0000"), "{stdout}\n{}", std::fs::read_to_string(&model).unwrap());
    assert!(!String::from_utf8_lossy(&out.stderr).contains(UNCALIBRATED));
}

#[test]
fn evaluate_reports_missing_counterparts_and_is_reproducible() {
    if find_chrome(None).is_none() {
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let corpus = synth::corpus(2, 12);
    let (ref_dir, gen_dir) = (tmp.path().join("ref"), tmp.path().join("gen"));
    write_pages(&ref_dir, &[("a", &corpus[0].html), ("b", &corpus[1].html)]);
    write_pages(&gen_dir, &[("a", &corpus[0].html)]);
    let mut outputs = Vec::new();
    for run_dir in ["out1", "out2"] {
        let out_dir = tmp.path().join(run_dir);
        let out = run(&["evaluate", s(&ref_dir), s(&gen_dir), "--out", s(&out_dir), "--debug-blocks"]);
        assert_eq!(code(&out), EXIT_OK, "{}", String::from_utf8_lossy(&out.stderr));
        for f in ["report.csv", "gallery/index.html", "gallery/a.ref.png", "gallery/a.gen.png", "gallery/a.ref.blocks.png"] {
            assert!(out_dir.join(f).is_file(), "{f}");
        }
        outputs.push(std::fs::read_to_string(out_dir.join("report.json")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let report: BatchReport = serde_json::from_str(&outputs[0]).unwrap();
    assert_eq!(report.pages.len(), 1);
    assert_eq!(report.pages[0].block_match, 1.0);
    assert_eq!(report.failures.len(), 1);
    assert_eq!(report.failures[0].page, "b");
    assert_eq!(report.failures[0].kind, "missing_counterpart");
}

#[test]
fn evaluate_maps_infrastructure_failures_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let page = "<!DOCTYPE html><html><body><p>hello</p><img src=\"rick.jpg\"></body></html>";
    let (ref_dir, gen_dir) = (tmp.path().join("ref"), tmp.path().join("gen"));
    write_pages(&ref_dir, &[("a", page)]);
    write_pages(&gen_dir, &[("a", page)]);
    let out_dir = tmp.path().join("out");
    let args = |cfg: &str| {
        vec![
            "--config".to_string(),
            cfg.to_string(),
            "evaluate".into(),
            s(&ref_dir).into(),
            s(&gen_dir).into(),
            "--out".into(),
            s(&out_dir).into(),
        ]
    };
    let run_with = |cfg: &str| {
        let a = args(cfg);
        code(&run(&a.iter().map(String::as_str).collect::<Vec<_>>()))
    };

    let cfg = config(tmp.path(), "[renderer]\ncommand = \"/nonexistent/chromium\"\n");
    assert_eq!(run_with(&cfg), EXIT_RENDERER_UNAVAILABLE);

    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let cfg = config(
        tmp.path(),
        &format!("[embedder]\nkind = \"sidecar\"\nurl = \"http://127.0.0.1:{port}\"\ntimeout_secs = 2\n"),
    );
    assert_eq!(run_with(&cfg), EXIT_EMBEDDER_UNAVAILABLE);

    if find_chrome(None).is_none() {
        return;
    }
    // a page whose image request never completes
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    std::thread::spawn(move || {
        let held: Vec<_> = listener.incoming().take(8).collect();
        std::thread::sleep(std::time::Duration::from_secs(60));
        drop(held);
    });
    let stalled = format!("<!DOCTYPE html><html><body><p>hello</p><img src=\"http://127.0.0.1:{port}/x.png\"></body></html>");
    write_pages(&ref_dir, &[("a", &stalled)]);
    let cfg = config(tmp.path(), "[renderer]\ntimeout_secs = 2\n");
    assert_eq!(run_with(&cfg), EXIT_RENDER_TIMEOUT);
    let report: BatchReport = serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.failures[0].kind, "render_timeout");
}
