use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

fn pkahler(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pkahler"))
        .args(args)
        .env_remove("PKAHLER_PROFILE")
        .env_remove("PKAHLER_K")
        .env_remove("PKAHLER_SEED")
        .env_remove("PKAHLER_FORMAT")
        .env_remove("PKAHLER_OUT")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn verdicts(report: &Value) -> Vec<(String, bool)> {
    report
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["invariant"].as_str().unwrap().to_string(), r["pass"].as_bool().unwrap()))
        .collect()
}

#[test]
fn check_report_is_a_flat_list_with_the_documented_schema() {
    let out = pkahler(&["check"]);
    let report = json(&out);
    for r in report.as_array().unwrap() {
        let obj = r.as_object().unwrap();
        let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        keys.sort();
        assert_eq!(keys, ["invariant", "max_residual", "pass", "tolerance", "worst_point"]);
    }
    let failing: Vec<String> = verdicts(&report).into_iter().filter(|(_, ok)| !ok).map(|(n, _)| n).collect();
    assert_eq!(failing, ["scal_full_vs_displayed_formula", "scal_invariance_displayed_formula"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn check_verdicts_do_not_depend_on_seed() {
    let a = verdicts(&json(&pkahler(&["check"])));
    let b = verdicts(&json(&pkahler(&["--seed", "7", "check"])));
    assert_eq!(a, b);
}

#[test]
fn check_is_byte_identical_for_same_seed() {
    let a = pkahler(&["--seed", "3", "--profile", "quadratic", "check"]);
    let b = pkahler(&["--seed", "3", "--profile", "quadratic", "check"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn increasing_table_profile_fails_axioms() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "# t f f' f'' f'''").unwrap();
    for i in 0..20 {
        let t = i as f64 * 0.5;
        writeln!(file, "{t} {} 1 0 0", t).unwrap();
    }
    let path = file.path().to_str().unwrap();
    let out = pkahler(&["--profile", "table", "--table", path, "check"]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&out);
    let axioms = verdicts(&report).into_iter().find(|(n, _)| n == "profile_axioms").unwrap();
    assert!(!axioms.1);
}

#[test]
fn table_profile_sampled_from_linear_satisfies_axioms() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    for i in 0..=400 {
        let t = i as f64 * 0.5;
        writeln!(file, "{t},{},-1,0,0", -t).unwrap();
    }
    let path = file.path().to_str().unwrap();
    let table = verdicts(&json(&pkahler(&["--profile", "table", "--table", path, "check"])));
    let profile_ok = table.iter().find(|(n, _)| n == "profile_axioms").unwrap().1;
    assert!(profile_ok);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(pkahler(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(pkahler(&["curvature", "--u-grid", "0:1"]).status.code(), Some(2));
    assert_eq!(pkahler(&["--k", "-1", "check"]).status.code(), Some(2));
    assert_eq!(pkahler(&["--profile", "table", "check"]).status.code(), Some(2));
    assert_eq!(pkahler(&["isometry", "recover", "--moebius", "1,1,1,1"]).status.code(), Some(2));
}

#[test]
fn domain_errors_exit_1_and_echo_the_point() {
    let out = pkahler(&["flow", "--hamiltonian", "h1", "--start", "0,-1,0,0"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("-1.0"), "{err}");
}

#[test]
fn scan_bound_k1_passes() {
    let out = pkahler(&["scan-bound", "--k", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert!(r["max_scal"].as_f64().unwrap() < 1.0);
    assert_eq!(r["pass"], Value::Bool(true));
}

#[test]
fn darboux_default_passes() {
    let out = pkahler(&["darboux"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert!(r["max_lagr_defect"].as_f64().unwrap() <= 1e-5);
    assert!(r["max_darboux_residual"].as_f64().unwrap() <= 1e-4);
    assert_eq!(r["grid"]["b1"].as_array().unwrap().len(), 10);
}

#[test]
fn flow_h2_final_row_matches_exact_flow() {
    let out = pkahler(&["flow", "--hamiltonian", "h2", "--time", "0.5", "--start", "0,1,1,0"]);
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), ["t", "x", "y", "u", "v", "H1", "H2"]);
    let last = reader.records().last().unwrap().unwrap();
    let row: Vec<f64> = last.iter().map(|c| c.parse().unwrap()).collect();
    // φ_s(z, w) = (e^{2s} z, e^{−3s} w)
    let exact = [0.0, (1.0f64).exp(), (-1.5f64).exp(), 0.0];
    assert_eq!(row[0], 0.5);
    for (got, want) in row[1..5].iter().zip(exact) {
        assert!((got - want).abs() <= 1e-9, "{got} vs {want}");
    }
}

#[test]
fn curvature_csv_has_full_precision_rows() {
    let out = pkahler(&["curvature", "--u-grid", "0:3:13"]);
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 13);
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 1.0);
    assert!(rows[4][0].contains("e0"));
}

#[test]
fn isometry_verify_and_recover() {
    let ok = pkahler(&["isometry", "verify", "--moebius", "2,1,1,1", "--theta", "0.3", "--flip1", "--flip2"]);
    assert_eq!(ok.status.code(), Some(0));
    let r = json(&ok);
    assert!(r["isometry_residual"].as_f64().unwrap() <= 1e-7);
    let rec = pkahler(&["isometry", "recover", "--moebius", "-2,1,1,-1", "--theta", "5.9", "--flip2"]);
    assert_eq!(rec.status.code(), Some(0));
    let r = json(&rec);
    assert!(r["parameter_error"].as_f64().unwrap() <= 1e-6);
    assert_eq!(r["recovered"]["flip2"], Value::Bool(true));
    assert_eq!(r["recovered"]["flip1"], Value::Bool(false));
}

#[test]
fn out_flag_writes_the_same_bytes_as_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.json");
    let to_file = pkahler(&["--out", path.to_str().unwrap(), "scan-bound"]);
    assert_eq!(to_file.status.code(), Some(0));
    assert!(to_file.stdout.is_empty());
    let stdout = pkahler(&["scan-bound"]);
    assert_eq!(std::fs::read(&path).unwrap(), stdout.stdout);
}

#[test]
fn env_vars_override_defaults() {
    let via_env = Command::new(env!("CARGO_BIN_EXE_pkahler"))
        .args(["scan-bound"])
        .env("PKAHLER_K", "100")
        .env("PKAHLER_FORMAT", "csv")
        .output()
        .unwrap();
    let via_flag = pkahler(&["--k", "100", "--format", "csv", "scan-bound"]);
    assert_eq!(via_env.stdout, via_flag.stdout);
    assert!(String::from_utf8_lossy(&via_flag.stdout).starts_with("key,value"));
}
