use std::path::PathBuf;
use std::process::{Command, Output};

use mwtree::ReportDocument;
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../fixtures/{name}.json"))
}

fn mwtree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mwtree"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn field(text: &str, name: &str) -> f64 {
    let line = text
        .lines()
        .find(|l| l.starts_with(name))
        .unwrap_or_else(|| panic!("no {name} line in\n{text}"));
    line.split('=').nth(1).unwrap().trim().parse().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(name)
}

#[test]
fn analyze_fig2a_finds_the_middle_edge() {
    let out = mwtree(&["analyze", fixture("FIG2A").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("characteristic-like edge (v3, v4)"), "{text}");
    let (kappa, mu) = (field(&text, "kappa"), field(&text, "mu"));
    assert!((kappa - 0.905190).abs() < 1e-5);
    assert!((mu - 1.0).abs() < 1e-6);
    assert!(text.contains("bound kappa <= mu: holds"));
}

#[test]
fn analyze_path5_finds_the_middle_vertex() {
    let out = mwtree(&["analyze", fixture("PATH5").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("characteristic-like vertex v3"), "{text}");
    let golden = (3.0 - 5f64.sqrt()) / 2.0;
    assert!((field(&text, "kappa") - golden).abs() < 1e-8);
    assert!((field(&text, "mu") - 0.58963).abs() < 1e-4);
}

#[test]
fn analyze_json_round_trips() {
    let out = mwtree(&["analyze", "--json", fixture("FIGA1").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let doc: ReportDocument = serde_json::from_str(&text).unwrap();
    assert_eq!(doc.n, 7);
    assert_eq!(doc.s, 3);
    assert!(doc.bound_holds && doc.kappa <= doc.mu);
    assert_eq!(doc.vertices.len(), 7);
    let again = serde_json::to_string_pretty(&doc).unwrap() + "\n";
    assert_eq!(again, text);
}

#[test]
fn start_vertex_does_not_change_the_answer() {
    let path = fixture("FIG2A");
    let from = |start: &str| {
        let out = mwtree(&[
            "charlike",
            "--json",
            "--start-vertex",
            start,
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        serde_json::from_str::<Value>(&stdout(&out)).unwrap()
    };
    for start in ["v1", "v3", "v6"] {
        let r = from(start);
        assert_eq!(r["kind"], "edge");
        assert_eq!(r["vertices"], serde_json::json!(["v3", "v4"]));
        assert_eq!(r["walk_trace"][0], start);
        assert!((r["nu"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    }
}

#[test]
fn kappa_json_and_output_file() {
    let target = scratch("kappa.json");
    let out = mwtree(&[
        "kappa",
        "--json",
        "-o",
        target.to_str().unwrap(),
        fixture("PATH5").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert!(v["bound_holds"].as_bool().unwrap());
    assert!(v["kappa"].as_f64().unwrap() < v["mu"].as_f64().unwrap());
}

#[test]
fn pinv_export_satisfies_zero_block_sums() {
    let out = mwtree(&[
        "pinv",
        "--grounded-at",
        "v2",
        fixture("FIG2A").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = |key: &str| -> Vec<Vec<f64>> { serde_json::from_value(v[key].clone()).unwrap() };
    let (l, x) = (rows("laplacian"), rows("pinv"));
    assert_eq!(l.len(), 12);
    assert_eq!(x.len(), 12);
    let tol = v["tolerance"].as_f64().unwrap();
    for r in v["penrose_residuals"].as_array().unwrap() {
        assert!(r.as_f64().unwrap() < tol);
    }
    // L X L = L, checked independently of the reported residuals
    let mul = |a: &[Vec<f64>], b: &[Vec<f64>]| -> Vec<Vec<f64>> {
        a.iter()
            .map(|row| {
                (0..b[0].len())
                    .map(|j| row.iter().zip(b).map(|(p, q)| p * q[j]).sum())
                    .collect()
            })
            .collect()
    };
    let lxl = mul(&mul(&l, &x), &l);
    for (p, q) in lxl.iter().flatten().zip(l.iter().flatten()) {
        assert!((p - q).abs() < 1e-8);
    }
    // each 2x2 block column of the inverse sums to zero over block rows
    for parity in 0..2 {
        let block_rows: Vec<&Vec<f64>> = x.iter().skip(parity).step_by(2).collect();
        for col in 0..12 {
            let sum: f64 = block_rows.iter().map(|row| row[col]).sum();
            assert!(sum.abs() < 1e-9);
        }
    }
}

#[test]
fn induced_reports_triangular_equivalence() {
    let out = mwtree(&["induced", "--json", fixture("FIGA1").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["induced"].as_array().unwrap().len(), 3);
    assert_eq!(v["equivalence"]["residual"], 0.0);
    assert_eq!(
        v["induced"][0]["weights"],
        serde_json::json!([3.0, 9.0, 1.0, 11.0, 15.0, 7.0])
    );

    let out = mwtree(&["induced", fixture("FIG2A").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn check_passes_and_is_reproducible() {
    let args = [
        "check", "--class", "pd", "--trials", "200", "--n-max", "10", "--s-max", "3", "--seed",
        "42", "--json",
    ];
    let first = mwtree(&args);
    assert_eq!(
        first.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    let second = mwtree(&args);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn invalid_inputs_exit_with_one() {
    let bad = scratch("asymmetric.json");
    std::fs::write(
        &bad,
        r#"{"s": 2, "weight_class": "pd", "vertices": ["a", "b"],
            "edges": [{"u": "a", "v": "b", "w": [[2, 1], [0, 2]]}]}"#,
    )
    .unwrap();
    let out = mwtree(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("edges[0].w"));

    let cycle = scratch("cycle.json");
    std::fs::write(
        &cycle,
        r#"{"s": 1, "weight_class": "pd", "vertices": ["a", "b", "c"],
            "edges": [{"u": "a", "v": "b", "w": [[1]]}, {"u": "b", "v": "c", "w": [[1]]},
                      {"u": "c", "v": "a", "w": [[1]]}]}"#,
    )
    .unwrap();
    assert_eq!(
        mwtree(&["charlike", cycle.to_str().unwrap()]).status.code(),
        Some(1)
    );

    assert_eq!(
        mwtree(&["analyze", "/nonexistent/tree.json"]).status.code(),
        Some(1)
    );
    let fig = fixture("FIG2A");
    assert_eq!(
        mwtree(&["charlike", "--start-vertex", "nope", fig.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(mwtree(&["check", "--trials", "0"]).status.code(), Some(1));
}
