use std::path::{Path, PathBuf};

use chaosync_cli::{run, EXIT_FAILURE, EXIT_OK, EXIT_USAGE};
use tempfile::TempDir;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("chaosync").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn certificate(dir: &TempDir) -> PathBuf {
    let path = dir.path().join("c.json");
    let (code, _, err) = call(&["synthesize", "--out", s(&path)]);
    assert_eq!(code, EXIT_OK, "{err}");
    path
}

#[test]
fn synthesize_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let cert = certificate(&dir);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    for key in ["b_form", "alpha_range", "Y", "Ka", "P", "K", "eps", "delta"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["lmi_margins"].as_array().unwrap().len(), 32);
    assert_eq!(json["bmi_margins"].as_array().unwrap().len(), 32);
    assert_eq!(json["p_eigenvalues"].as_array().unwrap().len(), 3);

    let (code, out, _) = call(&["verify", "--cert", s(&cert)]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("101-point"), "{out}");
}

#[test]
fn identity_distribution_and_sub_ranges() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("id.json");
    let (code, _, err) = call(&[
        "synthesize",
        "--b",
        "identity",
        "--alpha-min",
        "0.2",
        "--alpha-max",
        "0.9",
        "--out",
        s(&cert),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert_eq!(
        call(&["verify", "--cert", s(&cert), "--grid", "11"]).0,
        EXIT_OK
    );
}

#[test]
fn verify_rejects_indefinite_p() {
    let dir = tempfile::tempdir().unwrap();
    let cert = certificate(&dir);
    let mut json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    json["P"] = serde_json::json!([[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]]);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, json.to_string()).unwrap();
    let (code, _, err) = call(&["verify", "--cert", s(&bad)]);
    assert_eq!(code, EXIT_FAILURE);
    assert!(err.contains("positive definite"), "{err}");

    let run_csv = dir.path().join("r.csv");
    let (code, _, _) = call(&[
        "simulate",
        "--scenario",
        "step",
        "--cert",
        s(&bad),
        "--out",
        s(&run_csv),
    ]);
    assert_eq!(code, EXIT_FAILURE);
    assert!(!run_csv.exists());
}

#[test]
fn simulate_row_count_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cert = certificate(&dir);
    let csv = dir.path().join("run.csv");
    let metrics = dir.path().join("m.json");
    let (code, out, err) = call(&[
        "simulate",
        "--scenario",
        "step",
        "--cert",
        s(&cert),
        "--out",
        s(&csv),
        "--metrics",
        s(&metrics),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("time to sync"));
    let text = std::fs::read_to_string(&csv).unwrap();
    // Header plus (t_end/dt)/stride + 1 records.
    assert_eq!(text.lines().count(), 1 + 30_000 / 10 + 1);

    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&metrics).unwrap()).unwrap();
    assert_eq!(m["diverged"], false);
    assert!(m["time_to_sync"].as_f64().unwrap() <= 3.0);
    assert_eq!(m["lyapunov_violations"], 0);
}

#[test]
fn seed_batches_write_one_file_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cert = certificate(&dir);
    let csv = dir.path().join("rand.csv");
    let (code, out, err) = call(&[
        "simulate",
        "--scenario",
        "random-ic",
        "--cert",
        s(&cert),
        "--out",
        s(&csv),
        "--seeds",
        "3..6",
        "--t-end",
        "2",
        "--stride",
        "100",
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert_eq!(out.lines().count(), 3);
    let files: Vec<String> = (3..6)
        .map(|seed| {
            std::fs::read_to_string(dir.path().join(format!("rand-seed{seed}.csv"))).unwrap()
        })
        .collect();
    assert_ne!(files[0], files[1]);
    assert!(files
        .iter()
        .all(|f| f.lines().count() == 1 + 2000 / 100 + 1));
}

#[test]
fn bad_arguments_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cert = certificate(&dir);
    let out = dir.path().join("x.csv");
    for args in [
        vec![
            "simulate",
            "--scenario",
            "step",
            "--cert",
            s(&cert),
            "--out",
            s(&out),
            "--dt",
            "-1",
        ],
        vec![
            "simulate",
            "--scenario",
            "step",
            "--cert",
            s(&cert),
            "--out",
            s(&out),
            "--stride",
            "0",
        ],
        vec![
            "simulate",
            "--scenario",
            "sine",
            "--cert",
            s(&cert),
            "--out",
            s(&out),
            "--ts",
            "0",
        ],
        vec![
            "simulate",
            "--scenario",
            "step",
            "--cert",
            s(&cert),
            "--out",
            s(&out),
            "--seeds",
            "4..2",
        ],
        vec![
            "synthesize",
            "--alpha-min",
            "0.7",
            "--alpha-max",
            "0.2",
            "--out",
            s(&out),
        ],
        vec!["synthesize", "--alpha-max", "1.5", "--out", s(&out)],
        vec!["synthesize", "--b", "diagonal", "--out", s(&out)],
        vec!["verify"],
    ] {
        let (code, _, err) = call(&args);
        assert_eq!(code, EXIT_USAGE, "{args:?}: {err}");
        assert!(!err.is_empty());
    }
}

#[test]
fn missing_certificate_is_a_failure() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let (code, _, err) = call(&["verify", "--cert", s(&missing)]);
    assert_eq!(code, EXIT_FAILURE);
    assert!(!err.is_empty());
}
