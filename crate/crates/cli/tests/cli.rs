use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gedforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gedforge")).args(args).output().unwrap()
}

fn write(path: &Path, text: &str) -> String {
    fs::write(path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

const TRIANGLE: &str = r#"{"id": "t", "nodes": [{"id": 0, "label": "C"}, {"id": 1, "label": "N"}, {"id": 2, "label": "O"}],
    "edges": [{"u": 0, "v": 1}, {"u": 1, "v": 2}, {"u": 0, "v": 2}]}"#;
const PATH: &str = r#"{"id": "p", "nodes": [{"id": 0, "label": "C"}, {"id": 1, "label": "N"}], "edges": [{"u": 0, "v": 1}]}"#;

#[test]
fn solve_identical_graphs_reports_zero() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(&dir.path().join("g.json"), TRIANGLE);
    for method in ["astar", "beam", "hungarian", "vj"] {
        let v = stdout_json(&gedforge(&["solve", "--g1", &g, "--g2", &g, "--method", method]));
        assert_eq!(v["ged"], 0.0, "{method}");
        assert_eq!(v["path"].as_array().unwrap().len(), 3);
    }
    let v = stdout_json(&gedforge(&["solve", "--g1", &g, "--g2", &g]));
    assert_eq!(v["optimal"], true);
    assert!(v["states_enqueued"].as_u64().unwrap() > 0);
}

#[test]
fn solve_reports_path_and_cost() {
    let dir = tempfile::tempdir().unwrap();
    let g1 = write(&dir.path().join("a.json"), TRIANGLE);
    let g2 = write(&dir.path().join("b.json"), PATH);
    let cost = write(&dir.path().join("cost.json"), r#"{"variant": "uniform_label"}"#);
    let v = stdout_json(&gedforge(&["solve", "--g1", &g1, "--g2", &g2, "--cost", &cost, "--heuristic", "zero"]));
    // delete O and its two edges
    assert_eq!(v["ged"], 3.0);
    let ops: Vec<&str> = v["path"].as_array().unwrap().iter().map(|o| o.as_str().unwrap()).collect();
    assert_eq!(ops, vec!["0->0", "1->1", "2->eps"]);
}

#[test]
fn error_classes_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(&dir.path().join("g.json"), TRIANGLE);
    let bad = write(&dir.path().join("bad.json"), "{\"id\": \"x\", \"nodes\": [");
    let code = |args: &[&str]| gedforge(args).status.code().unwrap();
    assert_eq!(code(&["solve", "--g1", &g, "--g2", &g, "--method", "dfs"]), 3);
    assert_eq!(code(&["solve", "--g1", &g, "--g2", &g, "--heuristic", "oracle"]), 3);
    assert_eq!(code(&["solve", "--g1", &g, "--g2", &g, "--heuristic", "genn"]), 4);
    assert_eq!(code(&["solve", "--g1", &bad, "--g2", &g]), 5);
    assert_eq!(code(&["solve", "--g1", "/nonexistent/g.json", "--g2", &g]), 6);
    assert_eq!(code(&["solve", "--g1", &g, "--g2", &g, "--max-states", "1"]), 7);
    assert_eq!(code(&["solve", "--g1", &g]), 2);
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&["solve", "--g1", &g, "--g2", &g, "--heuristic", "genn", "--model", missing.to_str().unwrap()]), 4);
}

#[test]
fn gen_label_train_bench_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let v = stdout_json(&gedforge(&[
        "gen", "--n", "10", "--min-nodes", "3", "--max-nodes", "5", "--labels", "2", "--seed", "4",
        "--out", corpus.to_str().unwrap(),
    ]));
    assert_eq!(v["graphs"], 10);
    let manifest = v["manifest"].as_str().unwrap().to_string();
    let labeled = stdout_json(&gedforge(&["label", "--manifest", &manifest]));
    assert_eq!(labeled["unlabeled"], 0);

    let model = dir.path().join("model.json");
    let model = model.to_str().unwrap();
    let stage1 = dir.path().join("stage1.json");
    let stage1 = stage1.to_str().unwrap();
    let curve = dir.path().join("curve.csv");
    stdout_json(&gedforge(&[
        "train", "--manifest", &manifest, "--out", stage1, "--epochs", "3", "--batch-size", "8",
        "--curve", curve.to_str().unwrap(),
    ]));
    assert_eq!(fs::read_to_string(&curve).unwrap().lines().count(), 1 + 4);
    stdout_json(&gedforge(&[
        "train", "--manifest", &manifest, "--out", model, "--stage", "finetune", "--model", stage1,
        "--epochs", "2", "--finetune-pairs", "3",
    ]));
    let no_model = gedforge(&["train", "--manifest", &manifest, "--out", model, "--stage", "finetune"]);
    assert_eq!(no_model.status.code(), Some(4));

    let bench_dir = dir.path().join("bench");
    let methods = "astar-hungarian,astar-genn,hungarian,vj";
    let v = stdout_json(&gedforge(&[
        "bench", "--manifest", &manifest, "--methods", methods, "--model", model, "--out", bench_dir.to_str().unwrap(),
    ]));
    let pairs = fs::read_to_string(corpus.join("manifest.json")).unwrap();
    let test_pairs = serde_json::from_str::<Value>(&pairs).unwrap()["pairs"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|p| p["split"] == "test")
        .count();
    assert_eq!(v["rows"], test_pairs * 4);
    let csv = fs::read_to_string(bench_dir.join("bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + test_pairs * 4);
    assert!(csv.starts_with("pair_id,n1,n2,method,ged,optimal_ged,states_enqueued,time_ms"));

    let unknown = gedforge(&["bench", "--manifest", &manifest, "--methods", "astar-magic", "--out", bench_dir.to_str().unwrap()]);
    assert_eq!(unknown.status.code(), Some(3));

    let eval_dir = dir.path().join("eval");
    let report = stdout_json(&gedforge(&[
        "eval", "--manifest", &manifest, "--model", model, "--out", eval_dir.to_str().unwrap(),
    ]));
    assert_eq!(report["rows"].as_array().unwrap().len(), 6);
    assert_eq!(report["rows"][0]["optimal_fraction"], 1.0);
    assert!(eval_dir.join("eval.csv").exists() && eval_dir.join("eval.json").exists());
}

fn graph(id: &str, labels: &[&str]) -> String {
    let nodes: Vec<String> = labels.iter().enumerate().map(|(i, l)| format!(r#"{{"id": {i}, "label": "{l}"}}"#)).collect();
    let edges: Vec<String> = (1..labels.len()).map(|i| format!(r#"{{"u": {}, "v": {i}}}"#, i - 1)).collect();
    format!(r#"{{"id": "{id}", "nodes": [{}], "edges": [{}]}}"#, nodes.join(","), edges.join(","))
}

#[test]
fn eval_on_toy_set_matches_hand_computed_metrics() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("graphs")).unwrap();
    for (id, labels) in [("q", &["C"][..]), ("a", &["C"]), ("z", &["C", "N"]), ("m", &["C", "N", "O"]), ("v", &["O"])] {
        write(&dir.path().join(format!("graphs/{id}.json")), &graph(id, labels));
    }
    // the (q, z) label is 3 although the true distance is 2
    let manifest = write(
        &dir.path().join("manifest.json"),
        r#"{"format_version": 1, "cost_model": {"variant": "uniform_label"},
            "graphs": [{"path": "graphs/q.json", "split": "test"}, {"path": "graphs/a.json", "split": "train"},
                       {"path": "graphs/z.json", "split": "train"}, {"path": "graphs/m.json", "split": "train"},
                       {"path": "graphs/v.json", "split": "validation"}],
            "pairs": [{"g1": "graphs/q.json", "g2": "graphs/a.json", "ged": 0, "split": "test"},
                      {"g1": "graphs/q.json", "g2": "graphs/z.json", "ged": 3, "split": "test"},
                      {"g1": "graphs/q.json", "g2": "graphs/m.json", "ged": 4, "split": "test"}]}"#,
    );
    let report = stdout_json(&gedforge(&["eval", "--manifest", &manifest, "--methods", "astar-hungarian", "--k", "2"]));
    let row = &report["rows"][0];
    let f = |k: &str| row[k].as_f64().unwrap();
    // predictions 1, e^(-4/3), e^(-2); labels 1, e^(-2), e^(-2)
    let mse = ((-4.0f64 / 3.0).exp() - (-2.0f64).exp()).powi(2) / 3.0 * 1e3;
    assert!((f("mse") - mse).abs() < 1e-12);
    // ranks (3, 2, 1) against (3, 1.5, 1.5)
    assert!((f("rho") - 1.5 / 3f64.sqrt()).abs() < 1e-12);
    // predicted top 2 {a, z}; labeled top 2 {a, m}, the tie broken by id
    assert_eq!(f("p_at_10"), 0.5);
    assert!((f("optimal_fraction") - 2.0 / 3.0).abs() < 1e-12);
}
