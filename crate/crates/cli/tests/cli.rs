//! End-to-end tests of the `stoqease` binary: exit codes, artifact
//! determinism, and the documented file formats.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stoqease"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, contents: &str) {
    fs::write(dir.join(name), contents).unwrap();
}

#[test]
fn measure_stoquastic_input_reports_zero_and_exits_clean() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "h.txt", "1 -0.5\n-0.5 2\n");
    let out = run_in(dir.path(), &["measure", "--input", "h.txt", "--out", "m"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("m/results.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    assert!(last.ends_with(",0"), "row: {last}");
    assert!(dir.path().join("m/manifest.json").exists());
}

#[test]
fn measure_missing_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["measure", "--input", "nope.txt"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run_in(dir.path(), &["measure"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn asymmetric_matrix_is_invalid_config() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "h.txt", "0 1\n0.5 0\n");
    let out = run_in(dir.path(), &["measure", "--input", "h.txt"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn avgsign_of_two_level_system_is_unity() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "h.txt", "0 0.5\n0.5 0\n");
    let out = run_in(
        dir.path(),
        &["avgsign", "--input", "h.txt", "--beta", "1", "--m", "8", "--out", "a"],
    );
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("a/results.csv")).unwrap();
    let fields: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let sign: f64 = fields[3].parse().unwrap();
    assert!((sign - 1.0).abs() < 1e-12);
}

#[test]
fn sweep_is_bit_deterministic_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str, threads: &str| {
        vec![
            "sweep".to_string(),
            "--model".into(),
            "ladder".into(),
            "--n-rungs".into(),
            "3".into(),
            "--m".into(),
            "10".into(),
            "--grid".into(),
            "j_perp_over_j_par=0:2:3".into(),
            "--grid".into(),
            "j_cross_over_j_par=0:2:3".into(),
            "--seed".into(),
            "11".into(),
            "--threads".into(),
            threads.into(),
            "--out".into(),
            out.into(),
        ]
    };
    for (out, threads) in [("r1", "1"), ("r2", "4"), ("r3", "1")] {
        let argv = args(out, threads);
        let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
        let out = run_in(dir.path(), &argv);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let read = |p: &str| fs::read(dir.path().join(p)).unwrap();
    assert_eq!(read("r1/results.csv"), read("r2/results.csv"));
    assert_eq!(read("r1/results.csv"), read("r3/results.csv"));
    assert_eq!(read("r1/plot_nu1_ratio.txt"), read("r2/plot_nu1_ratio.txt"));
    assert_eq!(
        read("r1/plot_log_inv_sign_ratio.txt"),
        read("r2/plot_log_inv_sign_ratio.txt")
    );
}

#[test]
fn sweep_rows_never_worsen_the_measure() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "sweep",
            "--model",
            "jmodel",
            "--n-rungs",
            "3",
            "--m",
            "10",
            "--grid",
            "j2_over_j=0:2:3",
            "--grid",
            "j3_over_j=0:2:3",
            "--seed",
            "4",
            "--out",
            "s",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("s/results.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let before: f64 = f[2].parse().unwrap();
        let after: f64 = f[3].parse().unwrap();
        assert!(
            after <= before * (1.0 + 1e-12) + 1e-12,
            "row worsened the measure: {line}"
        );
    }
}

#[test]
fn sweep_plotdata_round_trips_against_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "sweep",
            "--model",
            "ladder",
            "--n-rungs",
            "3",
            "--m",
            "10",
            "--grid",
            "j_perp_over_j_par=0:1:2",
            "--grid",
            "j_cross_over_j_par=0:1:2",
            "--seed",
            "8",
            "--out",
            "s",
        ],
    );
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("s/results.csv")).unwrap();
    let (a1, a2, vals) =
        stoqease_cli::output::read_plot_matrix(&dir.path().join("s/plot_nu1_ratio.txt")).unwrap();
    assert_eq!(a1.len(), 2);
    assert_eq!(a2.len(), 2);
    for (k, line) in csv.lines().skip(1).enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        let before: f64 = f[2].parse().unwrap();
        let after: f64 = f[3].parse().unwrap();
        let expected = if before > 0.0 { after / before } else { 1.0 };
        assert!((vals[k] - expected).abs() <= 1e-15 * (1.0 + expected.abs()));
    }
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "cfg.json",
        r#"{
            "experiment": "sign_study",
            "n_qubits": 4,
            "n_seeds": 2,
            "m": 20,
            "alpha_grid": {"name": "alpha", "min": 0.5, "max": 5.0, "steps": 4},
            "seed": 3,
            "out": "ignored"
        }"#,
    );
    let out = run_in(
        dir.path(),
        &["sign-study", "--config", "cfg.json", "--out", "study", "--n-seeds", "3"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("study/results.csv")).unwrap();
    // 3 instances (flag override) x 4 grid points + header.
    assert_eq!(csv.lines().count(), 1 + 3 * 4);
    let manifest = fs::read_to_string(dir.path().join("study/manifest.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(v["experiment"], "sign_study");
    assert_eq!(v["seed"], 3);
    assert_eq!(v["config"]["n_seeds"], 3);
    assert!(v["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .any(|o| o["file"] == "spearman.csv"));
}

#[test]
fn config_experiment_kind_must_match_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "cfg.json",
        r#"{"experiment": "measure", "input": "h.txt"}"#,
    );
    let out = run_in(dir.path(), &["avgsign", "--config", "cfg.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn optimize_recovers_scrambled_instance_cli() {
    let dir = tempfile::tempdir().unwrap();
    // A hand-scrambled stoquastic 2-qubit term: conjugate a stoquastic
    // matrix by a rotation so the computational basis shows positives.
    let out = run_in(
        dir.path(),
        &[
            "benchmark-random",
            "--local-dim",
            "2",
            "--instances",
            "3",
            "--seed",
            "21",
            "--out",
            "b",
        ],
    );
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("b/results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[6], "1", "instance not recovered: {line}");
    }

    // Reuse one instance file through the optimize subcommand.
    let (term, _) = stoqease_core::models::random_stoquastic_instance(2, 99);
    let mut text = String::new();
    for r in 0..4 {
        let row: Vec<String> = (0..4).map(|c| format!("{:.17e}", term.matrix()[(r, c)])).collect();
        text.push_str(&row.join(" "));
        text.push('\n');
    }
    write(dir.path(), "term.txt", &text);
    let out = run_in(
        dir.path(),
        &[
            "optimize",
            "--input",
            "term.txt",
            "--local-dim",
            "2",
            "--init",
            "haar-random",
            "--restarts",
            "2",
            "--seed",
            "5",
            "--out",
            "o",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // The optimal basis file is a valid orthogonal matrix.
    let o_text = fs::read_to_string(dir.path().join("o/o_optimal.txt")).unwrap();
    let m = stoqease_cli::output::parse_matrix(&o_text).unwrap();
    let defect = (m.transpose() * &m - nalgebra::DMatrix::<f64>::identity(2, 2))
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()));
    assert!(defect < 1e-8);
    let csv = fs::read_to_string(dir.path().join("o/results.csv")).unwrap();
    let last: Vec<&str> = csv.lines().last().unwrap().split(',').collect();
    let final_nu: f64 = last[5].parse().unwrap();
    assert!(final_nu < 1e-5, "final window measure {final_nu}");
}

#[test]
fn verify_reduction_passes_on_triangle_and_embeds() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "k3.txt", "0 1\n0 2\n1 2\n");
    let out = run_in(
        dir.path(),
        &["verify-reduction", "--graph", "k3.txt", "--out", "v"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("v/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["ising_ground_energy"], -1);
    assert_eq!(report["zflip_min_nu1"], 1.0);
    assert_eq!(report["clifford_matches_zflip"], true);

    let out = run_in(dir.path(), &["embed-maxcut", "--graph", "k3.txt", "--out", "e"]);
    assert!(out.status.success());
    let embedded: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("e/embedded.json")).unwrap())
            .unwrap();
    assert_eq!(embedded["n_qubits"], 6);
    assert_eq!(embedded["penalty"], 8.0);
    assert_eq!(embedded["nu1_computational_basis"], 3.0);
    assert_eq!(embedded["xx_terms"].as_array().unwrap().len(), 3);
    assert_eq!(embedded["zz_terms"].as_array().unwrap().len(), 9);
}

#[test]
fn rerun_with_different_config_flags_mismatch_in_manifest() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "h.txt", "0 0.5\n0.5 0\n");
    let first = run_in(dir.path(), &["measure", "--input", "h.txt", "--out", "m"]);
    assert!(first.status.success());
    let second = run_in(
        dir.path(),
        &["measure", "--input", "h.txt", "--p", "2", "--out", "m"],
    );
    assert!(second.status.success());
    let stderr = String::from_utf8_lossy(&second.stderr);
    assert!(stderr.contains("different config"), "stderr: {stderr}");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("m/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["previous_checksum_mismatch"], true);
}

#[test]
fn unknown_grid_axis_is_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["sweep", "--model", "ladder", "--grid", "bogus=0:1:2"],
    );
    assert_eq!(out.status.code(), Some(1));
}
