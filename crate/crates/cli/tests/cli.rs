use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use negbound_core::bound::simulate_expectations;
use negbound_core::fock::{HilbertSpec, TruncatedState};

fn negbound(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_negbound"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

/// Small and fast: single-photon cutoff, two click outcomes.
const SMALL: &[&str] = &["--ideal", "--n-max", "1", "--outcomes", "0,1"];

fn with(extra: &[&'static str], base: &[&'static str]) -> Vec<&'static str> {
    let mut v = extra.to_vec();
    v.extend_from_slice(base);
    v
}

#[test]
fn table_reports_reference_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = negbound(&["table", "--epsilons", "0,0.01", "-o", "t.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "row,epsilon,value,status,verified");
    assert!(lines[1].starts_with("ln_initial,,0.580345"));
    assert_eq!(lines.iter().filter(|l| l.starts_with("bound,")).count(), 2);
    assert!(lines.iter().filter(|l| l.starts_with("bound,")).all(|l| l.ends_with(",true")));
}

#[test]
fn sweep_is_byte_identical_under_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let args = with(
        &["sweep", "--axis", "phase-error", "--values", "0.1,0.05", "--trials", "3", "--seed", "11"],
        SMALL,
    );
    let mut a = args.clone();
    a.extend(["-o", "a.csv"]);
    let mut b = args.clone();
    b.extend(["-o", "b.csv"]);
    assert!(negbound(&a, dir.path()).status.success());
    assert!(negbound(&b, dir.path()).status.success());
    let ca = fs::read(dir.path().join("a.csv")).unwrap();
    let cb = fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(ca, cb);
    let text = String::from_utf8(ca).unwrap();
    assert!(!text.contains('\r'));
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(rows[0].starts_with("phase_error,0.05,"));
    assert!(rows[1].starts_with("phase_error,0.1,"));
    assert!(dir.path().join("a.timing.csv").exists());
}

#[test]
fn noise_without_seed_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = negbound(&with(&["sweep", "--axis", "phase-width", "--values", "0.2"], SMALL), dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
}

#[test]
fn failed_rows_give_nonzero_exit_but_keep_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = negbound(&with(&["sweep", "--axis", "lambda", "--values", "0.1,1.5", "-o", "s.csv"], SMALL), dir.path());
    assert_eq!(out.status.code(), Some(1));
    let csv = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.contains("lambda,1.5,,,,,,,,\"error: "));
}

#[test]
fn config_file_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.json"),
        r#"{"state": {"lambda": 0.3, "n_max": 1, "apd_efficiency": null},
            "detector": {"outcomes": [0, 1]},
            "sweep": {"axis": "transmission", "values": [0.9, 0.8]},
            "output": {"csv": "from_config.csv"}}"#,
    )
    .unwrap();
    let out = negbound(&["sweep", "-c", "c.json", "--lambda", "0.2"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("from_config.csv")).unwrap();
    // ln_initial of λ = 0.2 at n_max = 1
    let first: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(first[0], "transmission");
    assert_eq!(first[1], "0.8");
    let ln: f64 = first[2].parse().unwrap();
    let x: f64 = 0.2;
    let expected = ((1.0 + x) * (1.0 + x) / (1.0 + x * x)).log2();
    assert!((ln - expected).abs() < 1e-9, "{ln} vs {expected}");
}

#[test]
fn bound_accepts_measured_expectations() {
    let dir = tempfile::tempdir().unwrap();
    let out = negbound(&with(&["bound", "-o", "sim.json"], SMALL), dir.path());
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("sim.json")).unwrap()).unwrap();
    assert_eq!(report["verified"], true);
    assert!(report["lower_bound"].as_f64().unwrap() >= 0.0);

    // data of the two-mode vacuum, a product state
    let mut c = negbound_core::experiment::ExperimentConfig::default();
    c.state.n_max = 1;
    c.detector.outcomes = vec![0, 1];
    let vacuum = TruncatedState::number_state(HilbertSpec::two_mode(1, 1), &[0, 0]).unwrap();
    let data = simulate_expectations(&vacuum, &c.measurements().unwrap()).unwrap();
    fs::write(dir.path().join("m.json"), serde_json::to_string(&data).unwrap()).unwrap();
    let out = negbound(&with(&["bound", "--expectations", "m.json", "-o", "m_out.json"], SMALL), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("m_out.json")).unwrap()).unwrap();
    assert_eq!(r["verified"], true);
    assert!(r["lower_bound"].as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn povm_and_wigner_exports() {
    let dir = tempfile::tempdir().unwrap();
    let out = negbound(&["povm", "--cutoff", "2", "-o", "p.json"], dir.path());
    assert!(out.status.success());
    let docs: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("p.json")).unwrap()).unwrap();
    let docs = docs.as_array().unwrap();
    assert_eq!(docs.len(), 2);
    assert_eq!(docs[0]["elements"].as_array().unwrap().len(), 9);

    let out = negbound(&["wigner", "--points", "11", "--cutoff", "4", "--vacuum", "-o", "w"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let files: Vec<_> = fs::read_dir(dir.path().join("w")).unwrap().collect();
    assert_eq!(files.len(), 7);
    let vac = fs::read_to_string(dir.path().join("w/wigner_vacuum.csv")).unwrap();
    assert_eq!(vac.lines().next(), Some("x,p,W"));
    assert_eq!(vac.lines().count(), 1 + 11 * 11);
    assert!(vac.contains("\n0,0,0.3183098862\n"));
}
