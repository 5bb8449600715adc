use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;
use replab::config::{parse_grid, ModelSpec, RunConfig};
use replab::io::{self, CurveRow};

fn replab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_replab"))
        .args(args)
        .current_dir(dir)
        .env_remove("REPLAB_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn rows(dir: &Path, kind: &str) -> Vec<CurveRow> {
    io::read_curves_csv(&read(dir, "curves.csv"))
        .unwrap()
        .into_iter()
        .filter(|r| r.kind == kind)
        .collect()
}

#[test]
fn analyze_aaaa() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("a.txt"), "aaaa").unwrap();
    let o = replab(&["analyze", "a.txt", "-o", "out"], d.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = d.path().join("out");
    let l2 = rows(&out, "L2");
    assert!(l2.contains(&CurveRow {
        kind: "L2".into(),
        index: 4,
        value: 3,
        censored: 0
    }));
    assert!(read(&out, "curves.csv").contains("\nkind,index,value,censored\n"));
    let fits: serde_json::Value = serde_json::from_str(&read(&out, "fits.json")).unwrap();
    assert_eq!(fits["config"]["command"], "analyze");
    assert!(fits["tool"].as_str().unwrap().starts_with("replab "));
}

#[test]
fn analyze_distinct_bytes() {
    let d = tempfile::tempdir().unwrap();
    let bytes: Vec<u8> = (0..=255u8).collect();
    std::fs::write(d.path().join("b.bin"), &bytes).unwrap();
    let o = replab(
        &[
            "analyze", "b.bin", "--n-grid", "1..=256", "--k-grid", "1..=256", "-o", "out",
        ],
        d.path(),
    );
    assert_eq!(code(&o), 0);
    let out = d.path().join("out");
    let l2 = rows(&out, "L2");
    assert_eq!(l2.len(), 256);
    assert!(l2.iter().all(|r| r.value == 0));
    let r2 = rows(&out, "R2");
    assert_eq!(r2.len(), 256);
    assert!(r2.iter().all(|r| r.censored == 1));
}

#[test]
fn analyze_tokens_and_empty_input() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("t.txt"), "the cat the cat the").unwrap();
    let o = replab(&["analyze", "t.txt", "--mode", "tokens", "-o", "out"], d.path());
    assert_eq!(code(&o), 0);
    let out = d.path().join("out");
    assert!(read(&out, "curves.csv").contains("# input: 5 symbols, alphabet size 2"));
    assert!(rows(&out, "L2").contains(&CurveRow {
        kind: "L2".into(),
        index: 5,
        value: 3,
        censored: 0
    }));

    std::fs::write(d.path().join("e.txt"), "").unwrap();
    let o = replab(&["analyze", "e.txt", "-o", "empty"], d.path());
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("warning"));
    assert!(io::read_curves_csv(&read(&d.path().join("empty"), "curves.csv"))
        .unwrap()
        .is_empty());
}

#[test]
fn analyze_missing_input() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&replab(&["analyze", "nope.txt"], d.path())), 2);
    assert_eq!(code(&replab(&["analyze"], d.path())), 2);
}

#[test]
fn simulate_is_deterministic() {
    let d = tempfile::tempdir().unwrap();
    let args = [
        "simulate",
        "--model",
        "uniform:2",
        "--n",
        "16",
        "--seed",
        "7",
        "-o",
        "a",
    ];
    let files = ["sequence.txt", "curves.csv", "fits.json"];
    assert_eq!(code(&replab(&args, d.path())), 0);
    let first: Vec<String> = files.iter().map(|f| read(&d.path().join("a"), f)).collect();
    assert_eq!(code(&replab(&args, d.path())), 0);
    for (f, before) in files.iter().zip(&first) {
        assert_eq!(&read(&d.path().join("a"), f), before, "{f}");
    }
    let text = read(&d.path().join("a"), "sequence.txt");
    assert!(text.starts_with("2 16\n"));
    let seq = io::read_sequence_file(&text).unwrap();
    assert_eq!(seq.len(), 16);
    assert!(seq.symbols().iter().all(|&s| s < 2));
    assert!(text.contains("# config: {"));
}

#[test]
fn simulate_rejects_non_stochastic_row() {
    let d = tempfile::tempdir().unwrap();
    let o = replab(
        &[
            "simulate",
            "--model",
            r#"{"type":"markov","transition":[[0.5,0.5],[0.3,0.6]]}"#,
        ],
        d.path(),
    );
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("row 1"), "{}", stderr(&o));
}

#[test]
fn simulate_copy_source_is_flagged() {
    let d = tempfile::tempdir().unwrap();
    let o = replab(
        &["simulate", "--model", "copy:0.3,40", "--n", "500", "-o", "out"],
        d.path(),
    );
    assert_eq!(code(&o), 0);
    let text = read(&d.path().join("out"), "sequence.txt");
    assert!(io::metadata_lines(&text).iter().any(|l| l.starts_with("exploratory")));
}

#[test]
fn seed_precedence() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(
        d.path().join("c.json"),
        r#"{"seed": 5, "n": 64, "model": {"type": "uniform", "d": 2}}"#,
    )
    .unwrap();
    let run = |extra: &[&str], env: Option<&str>, out: &str| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_replab"));
        c.args(["--config", "c.json", "simulate", "-o", out])
            .args(extra)
            .current_dir(d.path());
        match env {
            Some(v) => c.env("REPLAB_SEED", v),
            None => c.env_remove("REPLAB_SEED"),
        };
        assert!(c.output().unwrap().status.success());
        let text = read(&d.path().join(out), "sequence.txt");
        let line = text.lines().find(|l| l.starts_with("# config:")).unwrap().to_string();
        let cfg: RunConfig = serde_json::from_str(line.trim_start_matches("# config: ")).unwrap();
        (cfg.seed, io::read_sequence_file(&text).unwrap())
    };
    let (s_file, a) = run(&[], None, "f");
    let (s_env, b) = run(&[], Some("9"), "e");
    let (s_flag, c) = run(&["--seed", "11"], Some("9"), "g");
    assert_eq!((s_file, s_env, s_flag), (5, 9, 11));
    assert_eq!(a.len(), 64);
    assert_ne!(a.symbols(), b.symbols());
    assert_ne!(b.symbols(), c.symbols());
}

#[test]
fn bad_config_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("c.json"), r#"{"sede": 5}"#).unwrap();
    let o = replab(&["--config", "c.json", "simulate", "--model", "fair-coin"], d.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("sede"));
    assert_eq!(
        code(&replab(&["verify", "nosuch", "--model", "fair-coin"], d.path())),
        2
    );
    assert_eq!(code(&replab(&["simulate", "--model", "dice:6"], d.path())), 2);
    let mut c = Command::new(env!("CARGO_BIN_EXE_replab"));
    c.args(["simulate", "--model", "fair-coin", "--n", "4"])
        .current_dir(d.path())
        .env("REPLAB_SEED", "x");
    assert_eq!(c.output().unwrap().status.code(), Some(2));
}

#[test]
fn verify_kac_passes() {
    let d = tempfile::tempdir().unwrap();
    let o = replab(&["verify", "kac", "--model", "fair-coin", "-o", "out"], d.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&read(&d.path().join("out"), "report.json")).unwrap();
    let r = &v["reports"][0];
    for field in ["check", "model", "params", "empirical", "theoretical", "se", "verdict"] {
        assert!(r.get(field).is_some(), "{field}");
    }
    assert_eq!(r["check"], "kac");
    assert_eq!(r["verdict"], "pass");
    assert_eq!(r["params"]["block"], "0 0 0");
    let theory = r["theoretical"]["inverse_probability"].as_f64().unwrap();
    assert!((theory - 8.0).abs() < 1e-12);
}

#[test]
fn verify_prop4_passes() {
    let d = tempfile::tempdir().unwrap();
    let o = replab(
        &[
            "verify",
            "prop4",
            "--model",
            "uniform:2",
            "--k-grid",
            "1..=8",
            "-o",
            "out",
        ],
        d.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn verify_perturbed_bound_fails() {
    let d = tempfile::tempdir().unwrap();
    let args = [
        "verify",
        "prop2",
        "--model",
        "fair-coin",
        "--paths",
        "20",
        "--n",
        "100000",
        "--k-grid",
        "8,12,16",
    ];
    let o = replab(&[&args[..], &["-o", "ok"]].concat(), d.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let o = replab(
        &[&args[..], &["--perturb-bound", "-0.9", "-o", "bad"]].concat(),
        d.path(),
    );
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_str(&read(&d.path().join("bad"), "report.json")).unwrap();
    assert_eq!(v["reports"][0]["verdict"], "fail");
    assert_eq!(v["config"]["perturbation"], -0.9);
}

#[test]
fn verify_incompatible_model() {
    let d = tempfile::tempdir().unwrap();
    let hmm = r#"{"type":"hmm","transition":[[0.9,0.1],[0.2,0.8]],"emission":[[0.7,0.3],[0.1,0.9]]}"#;
    let o = replab(&["verify", "kontoyiannis", "--model", hmm, "-o", "out"], d.path());
    assert_eq!(code(&o), 2);
    let v: serde_json::Value = serde_json::from_str(&read(&d.path().join("out"), "report.json")).unwrap();
    assert!(v["error"].as_str().unwrap().contains("not supported"));
    assert_eq!(v["reports"].as_array().unwrap().len(), 0);
}

#[test]
fn verify_copy_source_is_informational() {
    let d = tempfile::tempdir().unwrap();
    let o = replab(
        &[
            "verify",
            "theorems",
            "--model",
            "copy:0.3,40,0.25,0.25,0.25,0.25",
            "--paths",
            "2",
            "--n",
            "50000",
            "-o",
            "out",
        ],
        d.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&read(&d.path().join("out"), "report.json")).unwrap();
    assert_eq!(v["reports"][0]["informational"], true);
    assert_eq!(v["reports"][0]["verdict"], "inconclusive");
}

#[test]
fn entropy_table() {
    let d = tempfile::tempdir().unwrap();
    let args = [
        "entropy",
        "--model",
        "two-state:0.1,0.2",
        "--k-grid",
        "1..=4",
        "--orders",
        "1,2,inf",
    ];
    let o = replab(&[&args[..], &["-o", "nats"]].concat(), d.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o2 = replab(&[&args[..], &["--bits", "-o", "bits"]].concat(), d.path());
    assert_eq!(code(&o2), 0);
    let a = io::read_entropy_csv(&read(&d.path().join("nats"), "entropy.csv")).unwrap();
    let b = io::read_entropy_csv(&read(&d.path().join("bits"), "entropy.csv")).unwrap();
    // files stay in nats
    assert_eq!(a, b);
    assert!(read(&d.path().join("nats"), "entropy.csv").contains("\ngamma,k,i,lo,hi,kind\n"));
    let h_inf_1 = a.iter().find(|r| r.gamma == "inf" && r.k == 1 && r.i == 0).unwrap();
    assert!((h_inf_1.lo - 1.5f64.ln()).abs() < 1e-12);
    assert!(a.iter().any(|r| r.kind == replab_core::entropy::RowKind::Weighted));
    assert!(a.iter().any(|r| r.kind == replab_core::entropy::RowKind::ContextLength));
    let shown = String::from_utf8_lossy(&o2.stdout);
    assert!(shown.contains("(bits)"));
    assert!(shown.contains(&format!("{:.8}", 1.5f64.log2())));
}

#[test]
fn grids() {
    assert_eq!(parse_grid("dyadic", 10).unwrap(), vec![1, 2, 4, 8, 10]);
    assert_eq!(parse_grid("dyadic:8", 100).unwrap(), vec![1, 2, 4, 8]);
    assert_eq!(parse_grid("3..=5", 4).unwrap(), vec![3, 4]);
    assert_eq!(parse_grid("3..5", 10).unwrap(), vec![3, 4]);
    assert_eq!(parse_grid("9,1,4,4", 8).unwrap(), vec![1, 4]);
    assert!(parse_grid("x", 8).is_err());
}

#[test]
fn model_shorthands() {
    let m = ModelSpec::parse("two-state:0.1,0.2").unwrap().build().unwrap();
    assert!((m.block_probability(&[0, 1]).unwrap() - 1.0 / 15.0).abs() < 1e-12);
    assert_eq!(
        ModelSpec::parse("uniform:4").unwrap().build().unwrap().alphabet_size(),
        4
    );
    assert_eq!(
        ModelSpec::parse("fair-coin").unwrap().build().unwrap().alphabet_size(),
        2
    );
    assert!(ModelSpec::parse("cycle:3").unwrap().build().unwrap().is_tractable());
    assert!(ModelSpec::parse("copy:0.3,40")
        .unwrap()
        .build()
        .unwrap()
        .is_exploratory());
    let e = ModelSpec::parse("iid:0.5,0.6").unwrap().build().unwrap_err();
    assert!(e.to_string().starts_with("model: "), "{e}");
    let e = ModelSpec::parse(r#"{"type":"markov"}"#).unwrap().build().unwrap_err();
    assert!(e.to_string().contains("model.transition"), "{e}");
}

fn curve_row() -> impl Strategy<Value = CurveRow> {
    (
        prop::sample::select(vec!["L1", "L2", "R1", "R2"]),
        1u64..1_000_000,
        0u64..1_000_000,
        0u8..2,
    )
        .prop_map(|(k, index, value, censored)| CurveRow {
            kind: k.to_string(),
            index,
            value,
            censored,
        })
}

proptest! {
    #[test]
    fn curves_csv_round_trip(rows in prop::collection::vec(curve_row(), 0..50)) {
        let bytes = io::curves_csv(&rows, &RunConfig::default(), &["note".into()]).unwrap();
        let back = io::read_curves_csv(std::str::from_utf8(&bytes).unwrap()).unwrap();
        prop_assert_eq!(back, rows);
    }

    #[test]
    fn sequence_file_round_trip(symbols in prop::collection::vec(0u32..5, 0..200)) {
        let seq = replab_core::SymbolSeq::new(symbols, 5).unwrap();
        let bytes = io::sequence_file(&seq, &RunConfig::default(), &[]);
        let back = io::read_sequence_file(std::str::from_utf8(&bytes).unwrap()).unwrap();
        prop_assert_eq!(back.symbols(), seq.symbols());
        prop_assert_eq!(back.alphabet_size(), 5);
    }
}

#[test]
fn config_round_trip() {
    let cfg = RunConfig {
        model: Some(ModelSpec::parse("markov:0.9,0.1;0.2,0.8").unwrap()),
        rho: replab::config::parse_rho("table:1=0.5,2=0.25").unwrap(),
        ..RunConfig::default()
    };
    let back: RunConfig = serde_json::from_str(&cfg.to_json()).unwrap();
    assert_eq!(back, cfg);
}
