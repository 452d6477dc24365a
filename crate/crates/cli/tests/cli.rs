use std::path::PathBuf;
use std::process::{Command, Output};

use cobitsim_cli::reports::{
    ConcentrateSummary, MapReport, PipelineSummary, SimulateReport, VerifyReport,
};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cobitsim"))
}

/// Strict schema check: the output must round-trip into its typed report
/// with unknown fields rejected.
fn validate_schema<T: serde::de::DeserializeOwned>(out: &Output) {
    serde_json::from_slice::<T>(&out.stdout).expect("output matches its schema");
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn simulate_crossing_reports_exact_values() {
    let out = run(&[
        "simulate",
        "--protocol",
        fixture("crossing.json").to_str().unwrap(),
        "--all-messages",
    ]);
    validate_schema::<SimulateReport>(&out);
    let v = stdout_json(&out);
    assert_eq!(v["epsilon_measured"].as_f64().unwrap(), 0.0);
    assert!((v["gamma00_entropy"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert_eq!(v["gamma00_rank"].as_u64().unwrap(), 4);
    assert!(v["decoupling_error"].as_f64().unwrap() <= 1e-9);
    assert_eq!(v["pr_table"].as_array().unwrap().len(), 16);
}

#[test]
fn simulate_noisy_crossing_measures_flip_probability() {
    let out = run(&[
        "simulate",
        "--protocol",
        fixture("noisy_crossing.json").to_str().unwrap(),
        "-a",
        "1",
        "-b",
        "0",
    ]);
    validate_schema::<SimulateReport>(&out);
    let v = stdout_json(&out);
    assert!((v["epsilon_measured"].as_f64().unwrap() - 0.1).abs() < 1e-9);
    assert_eq!(v["requested"][0].as_u64().unwrap(), 1);
}

#[test]
fn simulate_width_overflow_exits_3() {
    let out = run(&[
        "simulate",
        "--protocol",
        fixture("wide_protocol.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("qubits"), "stderr: {err}");
}

#[test]
fn simulate_schema_violation_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"version\": 1, \"builtin\": 42}").unwrap();
    let out = run(&["simulate", "--protocol", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pipeline_noiseless_all_trials_clean() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("ledger.csv");
    let out = run(&[
        "pipeline",
        "--config",
        fixture("pipeline_noiseless_k3.json").to_str().unwrap(),
        "--trials",
        "5",
        "--seed",
        "11",
        "--csv",
        csv_path.to_str().unwrap(),
    ]);
    validate_schema::<PipelineSummary>(&out);
    let v = stdout_json(&out);
    assert_eq!(v["p_fail"].as_f64().unwrap(), 0.0);
    assert_eq!(v["success_rate"].as_f64().unwrap(), 1.0);
    assert_eq!(v["message_error_rate"].as_f64().unwrap(), 0.0);
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = csv.trim_end().split("\r\n").collect();
    assert_eq!(lines.len(), 6); // header + 5 trials
    for line in &lines[1..] {
        // p_fail column is exactly 0
        assert_eq!(line.split(',').nth(7).unwrap(), "0");
    }
}

#[test]
fn pipeline_rerun_same_seed_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.csv");
    let second = dir.path().join("b.csv");
    for path in [&first, &second] {
        let out = run(&[
            "pipeline",
            "--config",
            fixture("pipeline_noisy_k5.json").to_str().unwrap(),
            "--trials",
            "20",
            "--seed",
            "7",
            "--jobs",
            "4",
            "--csv",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(
        std::fs::read(&first).unwrap(),
        std::fs::read(&second).unwrap()
    );
}

#[test]
fn pipeline_zero_trials_gives_analytic_summary() {
    let out = run(&[
        "pipeline",
        "--config",
        fixture("pipeline_noiseless_k3.json").to_str().unwrap(),
        "--trials",
        "0",
    ]);
    validate_schema::<PipelineSummary>(&out);
    let v = stdout_json(&out);
    assert_eq!(v["trials"].as_u64().unwrap(), 0);
    let terms = v["accounting"]["terms"].as_array().unwrap();
    assert_eq!(terms.len(), 7);
    let f: f64 = v["accounting"]["f_value"].as_f64().unwrap();
    let sum: f64 = terms.iter().map(|t| t.as_f64().unwrap()).sum();
    assert!((f - sum).abs() < 1e-12);
}

#[test]
fn regions_thm12_point() {
    let out = run(&["regions", "--map", "thm12", "--point", "-1,2,0"]);
    validate_schema::<MapReport>(&out);
    let v = stdout_json(&out);
    assert_eq!(
        v["output"].as_array().unwrap().as_slice(),
        [
            serde_json::json!(-1.0),
            serde_json::json!(2.0),
            serde_json::json!(1.0)
        ]
    );
}

#[test]
fn regions_diamond_point() {
    let out = run(&["regions", "--map", "qqe-to-cocoe", "--point", "1,1,0"]);
    let v = stdout_json(&out);
    let coords: Vec<f64> = v["output"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert_eq!(coords, vec![2.0, 2.0, -2.0]);
}

#[test]
fn regions_scripts_are_valid() {
    for name in ["tp_sd_chain.json", "elo_chain.json"] {
        let out = run(&["regions", "--script", fixture(name).to_str().unwrap()]);
        let v = stdout_json(&out);
        assert!(v["valid"].as_bool().unwrap(), "{name}");
    }
}

#[test]
fn regions_unknown_map_exits_2() {
    let out = run(&["regions", "--map", "nonsense", "--point", "1,2,3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn concentrate_sweep_summary() {
    let out = run(&[
        "concentrate",
        "--spectrum",
        "0.25,0.25,0.25,0.25",
        "--k-prime",
        "64",
        "--trials",
        "200",
        "--seed",
        "3",
    ]);
    validate_schema::<ConcentrateSummary>(&out);
    let v = stdout_json(&out);
    let per_copy = v["mean_per_copy"].as_f64().unwrap();
    assert!((per_copy - 1.826).abs() < 0.02, "per-copy {per_copy}");
}

#[test]
fn verify_identities_all_pass() {
    let out = run(&["verify-identities"]);
    validate_schema::<VerifyReport>(&out);
    let v = stdout_json(&out);
    assert!(v["all_pass"].as_bool().unwrap());
    for key in ["teleport", "superdense", "two_cobits", "tp_sd"] {
        assert!(v[key].as_f64().unwrap() <= 1e-10, "{key}");
    }
    assert!((v["tp_sd_probe_ebits"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn pipeline_transcript_dump() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("transcript.json");
    let out = run(&[
        "pipeline",
        "--config",
        fixture("pipeline_noisy_k5.json").to_str().unwrap(),
        "--trials",
        "1",
        "--seed",
        "5",
        "--transcript",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["codeword_a"].as_array().unwrap().len(), 5);
    // per-pair state dumps are elided (crossing states exceed the limit),
    // hashes retained
    for s in v["states"].as_array().unwrap() {
        assert_eq!(s["sha256"].as_str().unwrap().len(), 64);
        assert!(s.get("amplitudes").is_none());
    }
    assert!(v["side_channel_bits"].as_u64().unwrap() > 0);
}

mod schemas {
    use super::*;

    fn schema(name: &str) -> jsonschema::Validator {
        let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
            .join("schemas")
            .join(name);
        let text = std::fs::read_to_string(path).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        jsonschema::validator_for(&doc).expect("schema compiles")
    }

    fn assert_valid(validator: &jsonschema::Validator, out: &Output) {
        let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        let errors: Vec<String> = validator
            .iter_errors(&value)
            .map(|e| e.to_string())
            .collect();
        assert!(errors.is_empty(), "schema violations: {errors:?}");
    }

    #[test]
    fn outputs_validate_against_shipped_schemas() {
        assert_valid(
            &schema("simulate.schema.json"),
            &run(&[
                "simulate",
                "--protocol",
                fixture("noisy_crossing.json").to_str().unwrap(),
                "-a",
                "1",
                "-b",
                "0",
            ]),
        );
        assert_valid(
            &schema("pipeline.schema.json"),
            &run(&[
                "pipeline",
                "--config",
                fixture("pipeline_noisy_k5.json").to_str().unwrap(),
                "--trials",
                "3",
            ]),
        );
        assert_valid(
            &schema("regions.schema.json"),
            &run(&["regions", "--map", "thm12", "--point", "-1,2,0"]),
        );
        assert_valid(
            &schema("verdict.schema.json"),
            &run(&["regions", "--script", fixture("tp_sd_chain.json").to_str().unwrap()]),
        );
        assert_valid(
            &schema("concentrate.schema.json"),
            &run(&[
                "concentrate",
                "--spectrum",
                "0.5,0.5",
                "--k-prime",
                "32",
                "--trials",
                "10",
            ]),
        );
        assert_valid(&schema("verify.schema.json"), &run(&["verify-identities"]));
    }
}

#[test]
fn simulate_zero_bit_protocol_empty_table() {
    let out = run(&[
        "simulate",
        "--protocol",
        fixture("null_protocol.json").to_str().unwrap(),
    ]);
    validate_schema::<SimulateReport>(&out);
    let v = stdout_json(&out);
    assert_eq!(v["pr_table"].as_array().unwrap().len(), 0);
    assert_eq!(v["decoupling_error"].as_f64().unwrap(), 0.0);
}
