use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyadic-sparse"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn construct_z_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("z.json");
    let file = file.to_str().unwrap();
    let out = run(&["construct-z", "--m", "3", "--k", "1", "-o", file]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = run(&["verify", "--input", file]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["passed"], Value::Bool(true), "{v}");
}

#[test]
fn verify_csv_has_one_row_per_property() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.json");
    let file = file.to_str().unwrap();
    assert!(run(&["construct-p", "--m", "2", "-o", file]).status.success());
    let out = run(&[
        "verify",
        "--input",
        file,
        "--properties",
        "p1,p2,pigeonhole",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let props: Vec<String> = rows.records().map(|r| r.unwrap()[0].to_string()).collect();
    assert_eq!(props, ["p1", "p2", "pigeonhole"]);
}

#[test]
fn invalid_config_exits_with_two() {
    let out = run(&["pipeline", "--m", "1", "--k", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid config"));
}

#[test]
fn check_sparse_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let chain = write(dir.path(), "chain.json", r#"{"rects": ["0:0 x 0:0", "1:0 x 1:0"]}"#);

    let out = run(&["check-sparse", "--input", &chain, "--eta", "4/5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));

    let out = run(&["check-sparse", "--input", &chain, "--eta", "81/100"]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["max-sparsity", "--input", &chain]);
    assert!(out.status.success());
    assert_eq!(json(&out)["report"]["eta_star"], Value::String("4/5".into()));
}

#[test]
fn missing_input_is_an_error() {
    let out = run(&[
        "check-sparse",
        "--input",
        "/nonexistent/collection.json",
        "--eta",
        "1/2",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn version_is_stamped() {
    let out = run(&["--version"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains(env!("CARGO_PKG_VERSION")));
}
