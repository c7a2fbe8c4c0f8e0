mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use causalfuse::cli::{self, EXIT_INPUT, EXIT_IO, EXIT_OK, EXIT_UNKNOWN};
use causalfuse::symexpr::{parse_json, parse_latex};
use causalfuse::var::Kinds;
use common::{Edges, ExactModel};

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["causalfuse"];
    full.extend_from_slice(args);
    let code = cli::run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn data(file: &str) -> String {
    format!("{}/data/{file}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn identify_styles_agree() {
    let (code, latex, _) = run(&["identify", &data("two_arm_selection.problem"), "--style", "latex"]);
    assert_eq!(code, EXIT_OK);
    let (code, json, _) = run(&["identify", &data("two_arm_selection.problem"), "--style", "json"]);
    assert_eq!(code, EXIT_OK);
    let kinds: Kinds = [("S".to_string(), causalfuse::VertexKind::Selection)].into();
    assert_eq!(
        parse_latex(latex.trim(), &kinds).unwrap().canonicalize(),
        parse_json(json.trim()).unwrap().canonicalize()
    );
}

#[test]
fn identify_writes_traces() {
    let dir = tempfile::tempdir().unwrap();
    for file in ["trace.txt", "trace.json"] {
        let path = dir.path().join(file);
        let (code, _, _) = run(&[
            "identify",
            "--example",
            "therapy-trial",
            "--trace",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK);
        let body = fs::read_to_string(&path).unwrap();
        if file.ends_with(".json") {
            let v: serde_json::Value = serde_json::from_str(&body).unwrap();
            assert!(v["steps"].as_array().is_some_and(|s| !s.is_empty()), "{body}");
        } else {
            assert!(body.contains("P(Y|do(X))"), "{body}");
        }
    }
}

#[test]
fn flag_form_matches_problem_file() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.txt");
    fs::write(&graph, "W -> Z\nZ -> X\nX -> Y\nW <-> X\nW <-> Y\n").unwrap();
    let (code, by_flags, _) = run(&[
        "identify",
        "--graph",
        graph.to_str().unwrap(),
        "--data",
        "P(W,Z,X,Y)",
        "--query",
        "P(Y|do(X))",
    ]);
    assert_eq!(code, EXIT_OK);
    let (_, by_file, _) = run(&["identify", &data("basic_trapdoor.problem")]);
    assert_eq!(by_flags, by_file);
}

#[test]
fn exit_codes() {
    let (code, out, err) = run(&[
        "identify",
        "--example",
        "two-arm-selection-observational",
        "--budget-exprs",
        "10",
    ]);
    assert_eq!(code, EXIT_UNKNOWN);
    assert!(out.is_empty());
    assert!(err.contains("not derived"), "{err}");

    assert_eq!(run(&["identify", "/nonexistent/problem.txt"]).0, EXIT_IO);
    assert_eq!(run(&["identify", "--example", "nope"]).0, EXIT_INPUT);
    assert_eq!(run(&["identify", "--bogus-flag"]).0, EXIT_INPUT);
    assert_eq!(run(&["--help"]).0, EXIT_OK);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.problem");
    fs::write(
        &bad,
        "graph:\n  X -> Y\n  Y -> X\ndata:\n  P(X,Y)\nquery:\n  P(Y|do(X))\n",
    )
    .unwrap();
    let (code, _, err) = run(&["identify", bad.to_str().unwrap()]);
    assert_eq!(code, EXIT_INPUT, "{err}");
}

#[test]
fn trapdoors_report_is_json() {
    let (code, out, _) = run(&["trapdoors", "--example", "basic-trapdoor"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["confirmed"][0]["name"], "Z");
    assert_eq!(v["projection"]["Z"], "search-space-exhausted");
}

/// The basic trapdoor graph with vertices W, Z, X, Y as indices 0..4.
fn trapdoor_model() -> ExactModel {
    let e = Edges {
        n: 4,
        directed: vec![(0, 1), (1, 2), (2, 3)],
        bidirected: vec![(0, 2), (0, 3)],
    };
    ExactModel::random(&e, 11)
}

/// Rows with cell counts proportional to the model joint.
fn write_population(model: &ExactModel, scale: f64, path: &Path) {
    let mut text = String::from("W,Z,X,Y\n");
    for cell in 0..16u8 {
        let values: BTreeMap<usize, u8> = (0..4).map(|i| (i, cell >> i & 1)).collect();
        let p = model.conditional(&values, &BTreeMap::new(), &BTreeMap::new()).unwrap();
        let row = format!("{},{},{},{}\n", values[&0], values[&1], values[&2], values[&3]);
        for _ in 0..(p * scale).round() as usize {
            text.push_str(&row);
        }
    }
    fs::write(path, text).unwrap();
}

#[test]
fn estimate_recovers_the_interventional_effect_at_both_trapdoor_values() {
    let model = trapdoor_model();
    let truth = model
        .conditional(&BTreeMap::from([(3, 1)]), &BTreeMap::from([(2, 1)]), &BTreeMap::new())
        .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("population.csv");
    write_population(&model, 1e5, &csv);
    let dataset = format!("P(W,Z,X,Y)@{}", csv.display());
    for z in ["0", "1"] {
        let (code, out, err) = run(&[
            "estimate",
            "--example",
            "basic-trapdoor",
            "--dataset",
            &dataset,
            "--trapdoor",
            &format!("Z={z}"),
            "--target",
            "X=1",
            "--target",
            "Y=1",
        ]);
        assert_eq!(code, EXIT_OK, "{err}");
        let line = out.lines().find(|l| !l.starts_with('#')).unwrap();
        let value: f64 = line.split('\t').nth(1).unwrap().parse().unwrap();
        assert!((value - truth).abs() < 2e-3, "Z={z}: {value} vs {truth}");
    }
}

#[test]
fn estimate_rejects_undeclared_sources() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    fs::write(&csv, "W,Z,X,Y\n0,0,0,0\n").unwrap();
    let (code, _, _) = run(&[
        "estimate",
        "--example",
        "basic-trapdoor",
        "--dataset",
        &format!("P(W,X,Y)@{}", csv.display()),
    ]);
    assert_eq!(code, EXIT_INPUT);
    let (code, _, _) = run(&["estimate", "--example", "basic-trapdoor", "--dataset", "no-at-sign"]);
    assert_eq!(code, EXIT_INPUT);
}

const SMALL_STUDY: &str = r#"
seed = 3
replications = 50
trapdoor = "Z2"
trapdoor_values = [1, 0]
target = { Y = 1, X = 1 }
oracle_draws = 100000
empty_strata = "zero"

[[scenario]]
rct = 200
survey = 300

[[scenario]]
rct = 400
survey = 100
"#;

#[test]
fn simulate_writes_csv_and_json_independent_of_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.toml");
    fs::write(&cfg, SMALL_STUDY).unwrap();
    let json = dir.path().join("report.json");
    let (code, one, err) = run(&[
        "simulate",
        "--scenarios",
        cfg.to_str().unwrap(),
        "--threads",
        "1",
        "--json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(err.contains("truth"), "{err}");
    let lines: Vec<&str> = one.lines().collect();
    assert_eq!(lines[0], "RCT,Survey,bias_Z2=1,bias_Z2=0,rmse_Z2=1,rmse_Z2=0");
    assert_eq!(lines.len(), 3);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["results"].as_array().unwrap().len(), 2);

    let (_, three, _) = run(&["simulate", "--scenarios", cfg.to_str().unwrap(), "--threads", "3"]);
    assert_eq!(one, three);
    let (_, other_seed, _) = run(&["simulate", "--scenarios", cfg.to_str().unwrap(), "--seed", "4"]);
    assert_ne!(one, other_seed);
}

#[test]
fn simulate_rejects_bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.toml");
    fs::write(&cfg, SMALL_STUDY.replace("rct = 200", "rct = 0")).unwrap();
    assert_eq!(run(&["simulate", "--scenarios", cfg.to_str().unwrap()]).0, EXIT_INPUT);
    fs::write(&cfg, "replications = \"many\"\n").unwrap();
    assert_eq!(run(&["simulate", "--scenarios", cfg.to_str().unwrap()]).0, EXIT_INPUT);
}
