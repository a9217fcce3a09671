//! End-to-end runs of the `edsparse` binary.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use common::data;
use edsparse::corpus::load_graphs;
use tempfile::TempDir;

fn edsparse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edsparse"))
        .args(args)
        .env_remove("EDSPARSE_SEED")
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

struct Trained {
    _dir: TempDir,
    model: PathBuf,
}

/// One model shared by the tests that only parse.
fn trained() -> &'static Trained {
    static MODEL: OnceLock<Trained> = OnceLock::new();
    MODEL.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        let model = dir.path().join("model.json");
        let out = train(&model, &[]);
        assert!(out.status.success(), "{}", stderr(&out));
        Trained { _dir: dir, model }
    })
}

fn train(model: &Path, extra: &[&str]) -> Output {
    let sentences = data("synthetic/sentences.conll");
    let graphs = data("synthetic/graphs.eds");
    let config = data("config/small.toml");
    let mut args = vec![
        "train",
        "--sentences",
        s(&sentences),
        "--graphs",
        s(&graphs),
        "--config",
        s(&config),
        "-o",
        s(model),
    ];
    args.extend_from_slice(extra);
    edsparse(&args)
}

#[test]
fn train_parse_eval_round_trip() {
    let dir = TempDir::new().unwrap();
    let parsed = dir.path().join("parsed.eds");
    let sentences = data("synthetic/sentences.conll");
    let gold = data("synthetic/graphs.eds");
    let out = edsparse(&["parse", "--model", s(&trained().model), "--sentences", s(&sentences), "-o", s(&parsed)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(load_graphs(&parsed).unwrap().len(), 64);

    let out = edsparse(&["eval", "--pred", s(&parsed), "--gold", s(&gold), "--min", "0.9"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report = String::from_utf8(out.stdout).unwrap();
    assert!(report.lines().count() > 64);

    // An unreachable threshold is reported through the exit status.
    let out = edsparse(&["eval", "--pred", s(&parsed), "--gold", s(&gold), "--min", "1.01"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn connected_flag_yields_connected_graphs() {
    let sentences = data("synthetic/sentences.conll");
    for (flag, want_all) in [("--connected", true), ("--disconnected", false)] {
        let out = edsparse(&["parse", "--model", s(&trained().model), "--sentences", s(&sentences), flag]);
        assert!(out.status.success(), "{}", stderr(&out));
        let graphs = edsparse::corpus::parse_graphs(&String::from_utf8(out.stdout).unwrap(), "stdout").unwrap();
        if want_all {
            assert!(graphs.iter().all(|(_, g)| g.is_empty() || g.is_connected().unwrap()));
        }
    }
}

#[test]
fn json_lines_output() {
    let sentences = data("synthetic/sentences.conll");
    let out = edsparse(&["parse", "--model", s(&trained().model), "--sentences", s(&sentences), "--format", "jsonl"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 64);
    assert!(text.lines().all(|l| l.starts_with('{')));
}

#[test]
fn missing_context_falls_back_to_zeros() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("ctx.toml");
    let text = std::fs::read_to_string(data("config/small.toml")).unwrap();
    std::fs::write(&config, text.replace("ctx_dim = 0", "ctx_dim = 4\nctx_layers = 2")).unwrap();
    let model = dir.path().join("ctx-model.json");
    let sentences = data("synthetic/sentences.conll");
    let graphs = data("synthetic/graphs.eds");
    let out = edsparse(&[
        "train", "--sentences", s(&sentences), "--graphs", s(&graphs), "--config", s(&config), "--epochs", "2", "-o",
        s(&model),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("no context vectors"));

    let missing = dir.path().join("nowhere.ctx");
    let out = edsparse(&["parse", "--model", s(&model), "--sentences", s(&sentences), "--ctx", s(&missing)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("nowhere.ctx"));
    let with_missing = out.stdout;

    let out = edsparse(&["parse", "--model", s(&model), "--sentences", s(&sentences)]);
    assert!(out.status.success());
    assert!(stderr(&out).contains("zero context block"));
    assert_eq!(out.stdout, with_missing);

    // A model without a context block has no fallback to offer.
    let out = edsparse(&["parse", "--model", s(&trained().model), "--sentences", s(&sentences), "--ctx", s(&missing)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identical_files_score_one_in_every_mode() {
    let gold = data("metrics/gold.eds");
    let sentences = data("metrics/sentences.conll");
    for mode in ["smatch", "dep", "tags"] {
        let out = edsparse(&[
            "eval", "--pred", s(&gold), "--gold", s(&gold), "--mode", mode, "--sentences", s(&sentences), "--min", "1.0",
        ]);
        assert!(out.status.success(), "{mode}: {}", stderr(&out));
    }
}

#[test]
fn eval_modes_report_the_fixture_values() {
    let gold = data("metrics/gold.eds");
    let pred = data("metrics/pred.eds");
    let sentences = data("metrics/sentences.conll");
    let out = edsparse(&["eval", "--pred", s(&pred), "--gold", s(&gold), "--mode", "tags", "--sentences", s(&sentences)]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains(&format!("tag_accuracy\t{:.6}\n", 34.0 / 39.0)), "{text}");
    assert!(text.contains(&format!("concept_P\t{:.6}\n", 34.0 / 36.0)), "{text}");
    let out = edsparse(&["eval", "--pred", s(&pred), "--gold", s(&gold), "--mode", "dep"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let all = text.lines().last().unwrap();
    assert!(all.starts_with(&format!("ALL\t{:.6}\t{:.6}", 21.0 / 26.0, 21.0 / 29.0)), "{all}");
}

#[test]
fn pheno_command() {
    let gold = data("pheno/gold.pheno");
    let sentences = data("pheno/sentences.conll");
    let roles = data("pheno/roles.toml");
    let g = format!("gold={}", s(&data("pheno/gold.eds")));
    let c = format!("corrupted={}", s(&data("pheno/corrupted.eds")));
    let base = ["pheno", "--gold", s(&gold), "--sentences", s(&sentences), "--roles", s(&roles)];

    let mut args = base.to_vec();
    args.extend(["--system", &g, "--system", &c]);
    let out = edsparse(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.contains("gold,ALL,-,35,1.000000,\n"));
    assert!(csv.contains("corrupted,ALL,-,35,0.657143,\n"));

    let mut args = base.to_vec();
    args.extend(["--system", &g, "--system", &c, "--select", "corrupted", "--min", "0.9"]);
    let out = edsparse(&args);
    assert_eq!(out.status.code(), Some(1));
    assert!(!String::from_utf8(out.stdout).unwrap().contains("gold,"));

    let mut args = base.to_vec();
    args.extend(["--system", &g, "--select", "nobody"]);
    let out = edsparse(&args);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nobody"));
}

#[test]
fn input_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty.conll");
    std::fs::write(&empty, "").unwrap();
    let broken = dir.path().join("broken.eds");
    std::fs::write(&broken, "#id a\n{e1:\n e1:_x_v_1<0:1>[ARG1\n}\n").unwrap();
    let model = dir.path().join("m.json");
    let cases: Vec<Vec<&str>> = vec![
        vec!["train", "--sentences", s(&empty), "--graphs", s(&empty), "-o", s(&model)],
        vec!["eval", "--pred", s(&broken), "--gold", s(&broken)],
        vec!["parse", "--model", s(&broken), "--sentences", s(&empty)],
        vec!["eval", "--pred", "/nonexistent", "--gold", "/nonexistent"],
        vec!["frobnicate"],
    ];
    for args in cases {
        let out = edsparse(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
        assert!(!stderr(&out).is_empty());
    }
    assert!(!model.exists());
}

#[test]
fn seed_comes_from_the_environment() {
    let gold = data("metrics/gold.eds");
    let pred = data("metrics/pred.eds");
    let run = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_edsparse"))
            .args(["eval", "--pred", s(&pred), "--gold", s(&gold), "--restarts", "3"])
            .env("EDSPARSE_SEED", seed)
            .output()
            .unwrap()
    };
    let (a, b) = (run("7"), run("7"));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let bad = run("not-a-number");
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn training_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for (m, jobs) in [(&a, "1"), (&b, "4")] {
        let out = train(m, &["--epochs", "3", "--jobs", jobs]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}
