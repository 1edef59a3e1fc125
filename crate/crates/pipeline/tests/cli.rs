use std::path::Path;
use std::process::{Command, Output};

fn ample(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ample")).args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(ample(&[]).status.code(), Some(2));
    assert_eq!(ample(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(ample(&["--help"]).status.code(), Some(0));
    assert_eq!(ample(&["--version"]).status.code(), Some(0));
    let missing = ample(&["stats", "--in", "/nonexistent/dir"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error: "));
}

#[test]
fn synth_stats_simplify_round() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let out = ample(&["--seed", "3", "synth", "--n", "100", "--out", p(&corpus)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let graphs = std::fs::read_dir(&corpus)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "json"))
        .count();
    assert_eq!(graphs, 100);
    let motifs = std::fs::read_to_string(corpus.join("motifs.tsv")).unwrap();
    assert_eq!(motifs.lines().count(), 101);
    assert_eq!(motifs.lines().skip(1).filter(|l| !l.ends_with("\t-")).count(), 50);

    let csv = dir.path().join("stats.csv");
    let out = ample(&["stats", "--in", p(&corpus), "--out", p(&csv)]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), ample_core::metrics::CSV_HEADER);
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 101);
    assert!(rows.last().unwrap().starts_with("summary,"));
    assert!(rows.iter().all(|r| r.split(',').count() == 11));
    assert!(String::from_utf8_lossy(&out.stderr).contains("node simplification rate"));

    let simplified = dir.path().join("simple");
    let traces = dir.path().join("traces");
    let out = ample(&["simplify", "--in", p(&corpus), "--out", p(&simplified), "--trace", p(&traces)]);
    assert!(out.status.success());
    assert_eq!(std::fs::read_dir(&simplified).unwrap().count(), 100);
    assert_eq!(std::fs::read_dir(&traces).unwrap().count(), 100);
}

#[test]
fn train_eval_explain_round() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    assert!(ample(&["--seed", "1", "synth", "--n", "12", "--out", p(&corpus)]).status.success());
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"train": {"max_epochs": 2, "patience": 1, "batch_size": 4},
            "model": {"eagcn": {"hidden": 8, "ff_hidden": 8, "heads": 2},
                      "ksr": {"in_channels": 8, "out_channels": 8, "fc_hidden": 8}},
            "embedding": {"kind": "hashing"}}"#,
    )
    .unwrap();
    let model = dir.path().join("model.json");
    let history = dir.path().join("history.jsonl");
    let out = ample(&[
        "--config", p(&config), "train", "--in", p(&corpus), "--out", p(&model), "--history", p(&history),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("test accuracy"));
    let lines = std::fs::read_to_string(&history).unwrap();
    assert!((1..=2).contains(&lines.lines().count()));

    let out = ample(&["eval", "--model", p(&model), "--in", p(&corpus)]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["predictions"].as_array().unwrap().len(), 12);
    assert!(report["scores"]["f1"].is_number());

    let graph = corpus.join("func_0000.json");
    let out = ample(&["explain", "--model", p(&model), "--graph", p(&graph), "--top", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("p_vulnerable = "));
    assert_eq!(text.lines().count(), 4);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"train": {"patience": 500}}"#).unwrap();
    assert_eq!(ample(&["--config", p(&bad), "synth", "--n", "2", "--out", p(&corpus)]).status.code(), Some(1));
}
