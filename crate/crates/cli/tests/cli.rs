use assert_cmd::Command;
use predicates::prelude::*;

fn bin() -> Command {
    Command::cargo_bin("multizero").unwrap()
}

fn data(name: &str) -> String {
    format!("{}/../../data/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn analyze_network_reports_multiple() {
    bin()
        .args(["analyze", "--input", &data("hhk.crn")])
        .assert()
        .code(10)
        .stdout(predicate::str::contains("MULTIPLE"))
        .stdout(predicate::str::contains("(1,-1,-1,-1,1,-1)"));
}

#[test]
fn analyze_matrices_precluded() {
    bin()
        .args(["analyze", "--input", &data("univar13.mat")])
        .assert()
        .code(0)
        .stdout(predicate::str::contains("PRECLUDED"));
}

#[test]
fn analyze_matrices_multiple() {
    bin()
        .args(["analyze", "--input", &data("univar22.mat")])
        .assert()
        .code(10)
        .stdout(predicate::str::contains("MULTIPLE"));
}

#[test]
fn malformed_input_exits_one_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.crn");
    std::fs::write(&path, "species X1 X2\nrxn k1: X1 + -> X2\n").unwrap();
    bin()
        .args(["analyze", "--input", path.to_str().unwrap()])
        .assert()
        .code(1)
        .stderr(predicate::str::contains("line 2"));
}

#[test]
fn analyze_json_round_trips() {
    let out = bin()
        .args(["analyze", "--input", &data("hhk.crn"), "--json"])
        .assert()
        .code(10)
        .get_output()
        .stdout
        .clone();
    let report: serde_json::Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(report["verdict"], "MULTIPLE");
    assert_eq!(report["input"]["n"], 6);
    assert_eq!(report["input"]["l"], 2);
    let cert = &report["certificates"][0];
    assert_eq!(
        cert["delta_sign"],
        serde_json::json!([1, -1, -1, -1, 1, -1])
    );
    let witness = &report["witness"];
    assert_eq!(witness["kappa"].as_array().unwrap().len(), 6);
    assert_eq!(witness["x"].as_array().unwrap().len(), 6);
    assert!(report["residuals"]["pass"].as_bool().unwrap());
    // serializing the parsed document must reproduce an equivalent value
    let again: serde_json::Value =
        serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    assert_eq!(report, again);
}

fn write_report(name: &str, dir: &tempfile::TempDir) -> std::path::PathBuf {
    let out = bin()
        .args(["analyze", "--input", &data(name), "--json"])
        .assert()
        .get_output()
        .stdout
        .clone();
    let path = dir.path().join("report.json");
    std::fs::write(&path, out).unwrap();
    path
}

#[test]
fn certify_accepts_generated_witness() {
    let dir = tempfile::tempdir().unwrap();
    let report = write_report("univar22.mat", &dir);
    bin()
        .args([
            "certify",
            "--input",
            &data("univar22.mat"),
            "--witness",
            report.to_str().unwrap(),
        ])
        .assert()
        .code(0)
        .stdout(predicate::str::contains("witness verified"));
}

#[test]
fn certify_rejects_perturbed_witness() {
    let dir = tempfile::tempdir().unwrap();
    let report = write_report("hhk.mat", &dir);
    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let kappa = doc["witness"]["kappa"][0].as_str().unwrap().to_string();
    doc["witness"]["kappa"][0] = serde_json::json!(format!("1{kappa}"));
    std::fs::write(&report, serde_json::to_string(&doc).unwrap()).unwrap();
    bin()
        .args([
            "certify",
            "--input",
            &data("hhk.mat"),
            "--witness",
            report.to_str().unwrap(),
        ])
        .assert()
        .code(2)
        .stdout(predicate::str::contains("witness rejected"));
}

#[test]
fn certify_dimension_mismatch_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let report = write_report("univar22.mat", &dir);
    bin()
        .args([
            "certify",
            "--input",
            &data("hhk.mat"),
            "--witness",
            report.to_str().unwrap(),
        ])
        .assert()
        .code(1);
}

#[test]
fn convert_network_to_matrices() {
    bin()
        .args(["convert", "--input", &data("hhk.crn")])
        .assert()
        .code(0)
        .stdout(predicate::str::contains("C 4 6"))
        .stdout(predicate::str::contains("M 6 6"))
        .stdout(predicate::str::contains("L 2 6"));
}

#[test]
fn convert_full_rank_network_omits_linear_block() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("decay.crn");
    std::fs::write(&path, "species X1\nrxn k1: X1 -> 0\n").unwrap();
    bin()
        .args(["convert", "--input", path.to_str().unwrap()])
        .assert()
        .code(0)
        .stdout(predicate::str::contains("C 1 1"))
        .stdout(predicate::str::contains("L ").not());
}
