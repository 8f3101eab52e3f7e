use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const TERNARY: &str = r#"{
  "schema": "bowendim-model",
  "version": 1,
  "name": "ternary",
  "alphabet": 2,
  "transitions": [
    [1, 1],
    [1, 1]
  ],
  "bands": [1],
  "rates": [
    [3.0],
    [3.0]
  ],
  "stable_rates": [0.3333333333333333, 0.3333333333333333]
}
"#;

fn bowendim(args: &[&str], model: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bowendim"))
        .args(args)
        .arg(model)
        .output()
        .expect("binary runs")
}

fn write_model(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("model.json");
    std::fs::write(&p, text).unwrap();
    p
}

fn demo(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../models/{name}.json"))
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn full_shift_pressure_is_log_two() {
    let o = bowendim(
        &["pressure", "--potential", "table", "--zero"],
        &demo("ternary-conformal"),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let body = String::from_utf8_lossy(&o.stdout).into_owned();
    assert!(body.contains("0.693147180560"), "{body}");
    assert!(stderr(&o).contains("manifest: {"));
}

#[test]
fn malformed_row_names_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = TERNARY.replace("[1, 1],\n    [1, 1]", "[1, 1],\n    [1]");
    let o = bowendim(&["verify"], &write_model(dir.path(), &bad));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 8"), "{}", stderr(&o));
}

#[test]
fn model_invariants_are_checked_at_load() {
    let dir = tempfile::tempdir().unwrap();
    // c = 1 is not a contraction.
    let flat = TERNARY.replace("0.3333333333333333, 0.3333333333333333", "1.0, 1.0");
    let o = bowendim(&["verify"], &write_model(dir.path(), &flat));
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    // λ₂ ≥ λ₁ breaks domination.
    let demo_text = std::fs::read_to_string(demo("diagonal-l2")).unwrap();
    let swapped = demo_text.replacen("[8.0, 2.0]", "[2.0, 8.0]", 1);
    let o = bowendim(&["verify"], &write_model(dir.path(), &swapped));
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("/rates"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_two() {
    let model = demo("ternary-conformal");
    let o = bowendim(&["dimension", "--experiment", "nonsense"], &model);
    assert_eq!(o.status.code(), Some(2));
    let o = bowendim(&["pressure", "--potential", "psi", "--param", "5"], &model);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = Command::new(env!("CARGO_BIN_EXE_bowendim"))
        .args(["root"])
        .arg(&model)
        .env("BOWENDIM_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cap_exceeded_exits_three() {
    let o = bowendim(
        &[
            "pressure",
            "--potential",
            "psi",
            "--param",
            "1",
            "--method",
            "cylinder",
            "--length",
            "12",
        ],
        &demo("diagonal-l2"),
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("2000000"), "{}", stderr(&o));
}

#[test]
fn out_file_appends_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("roots.csv");
    let out_arg = out.to_str().unwrap();
    for _ in 0..2 {
        let o = bowendim(
            &["root", "--family", "psi", "--out", out_arg],
            &demo("ternary-conformal"),
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3, "{text}");
    assert_eq!(lines[1], lines[2]);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("roots.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "root");
    assert_eq!(manifest["rows"], 1);
    // A different table cannot be appended, and the file is left alone.
    let o = bowendim(&["verify", "--out", out_arg], &demo("ternary-conformal"));
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), text);
}

#[test]
fn failed_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let o = bowendim(
        &[
            "pressure",
            "--potential",
            "psi",
            "--param",
            "1",
            "--method",
            "cylinder",
            "--length",
            "12",
            "--out",
        ]
        .iter()
        .copied()
        .chain([out.to_str().unwrap()])
        .collect::<Vec<_>>(),
        &demo("diagonal-l2"),
    );
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn tolerance_does_not_move_leading_digits() {
    let model = demo("ternary-conformal");
    let coarse = bowendim(&["root", "--tol", "1e-3"], &model);
    let fine = bowendim(&["root", "--tol", "1e-10"], &model);
    let root = |o: &Output| {
        let text = String::from_utf8_lossy(&o.stdout).into_owned();
        let row = text.lines().nth(1).unwrap().to_string();
        let header: Vec<String> = text.lines().next().unwrap().split(',').map(String::from).collect();
        let i = header.iter().position(|h| h == "root").unwrap();
        row.split(',').nth(i).unwrap().parse::<f64>().unwrap()
    };
    let (a, b) = (root(&coarse), root(&fine));
    assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    assert_eq!(format!("{a:.2}"), format!("{b:.2}"));
}
