//! Acceptance criterion 11: the end-to-end mock benchmark through the CLI.

use std::path::Path;
use std::time::{Duration, Instant};

use llm4perf::harness::fixtures;

#[test]
fn criterion_11_end_to_end_mock_benchmark() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();

    // one synthetic system: 5 options × 4 values (3 sensitive)
    let space = serde_json::json!({
        "options": (0..5).map(|i| serde_json::json!({
            "name": format!("o{i}"),
            "kind": "numeric-discrete",
            "values": [0, 1, 2, 3]
        })).collect::<Vec<_>>()
    });
    let space_typed: llm4perf::config_space::ConfigSpace =
        serde_json::from_value(space.clone()).unwrap();
    let mock = fixtures::generic_mock_script(&space_typed, 7).unwrap();
    let mock_path = dir.path().join("mock.json");
    std::fs::write(&mock_path, mock.to_json()).unwrap();

    // three samplers (random, nsbs, llm4perf-mock), budgets {10, 20, 30},
    // five repetitions, both downstream models
    let spec = serde_json::json!({
        "datasets": [{
            "synth": {
                "space": space,
                "sensitive": ["o0", "o1", "o2"],
                "interactions": [["o0", "o1"]],
                "noise": 0.05,
                "seed": 1111,
                "metric_names": ["m1", "m2"],
                "system": "synthetic"
            }
        }],
        "samplers": [
            {"kind": "random"},
            {"kind": "nsbs"},
            {"kind": "llm4perf", "name": "llm4perf-mock", "batch_size": 7, "n_generators": 3}
        ],
        "budgets": [10, 20, 30],
        "repetitions": 5,
        "models": ["gbt", "fnn"],
        "reference": "nsbs",
        "mock_script": mock_path,
        "model_params": {
            "gbt": {"rounds": 60},
            "fnn": {"hidden": [16, 16], "epochs": 400}
        }
    });
    let spec_path = dir.path().join("eval.json");
    std::fs::write(&spec_path, spec.to_string()).unwrap();

    let output = std::process::Command::new(env!("CARGO_BIN_EXE_llm4perf"))
        .current_dir(dir.path())
        .args(["evaluate", "--spec", spec_path.to_str().unwrap(), "--out", "out"])
        .output()
        .expect("binary runs");
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );

    let out_dir = single_dir(&dir.path().join("out"));
    let csv = std::fs::read_to_string(out_dir.join("report.csv")).unwrap();
    // complete CSV: header + 3 samplers × 3 budgets × 2 metrics × 2 models
    assert_eq!(csv.lines().count(), 1 + 36, "csv:\n{csv}");
    assert!(!csv.contains("failed"), "csv has failed cells:\n{csv}");
    for line in csv.lines().skip(1) {
        assert!(line.ends_with(",ok"), "cell not ok: {line}");
        // five repetitions recorded per cell
        let reps: usize = line.split(',').nth(6).unwrap().parse().unwrap();
        assert_eq!(reps, 5);
    }
    // raw per-repetition RMSEs accompany the report
    let raw = std::fs::read_to_string(out_dir.join("raw.jsonl")).unwrap();
    assert_eq!(raw.lines().count(), 36);

    let elapsed = started.elapsed();
    assert!(
        elapsed < Duration::from_secs(600),
        "end-to-end benchmark took {elapsed:.2?}"
    );
    println!("acceptance criterion 11 (end-to-end mock benchmark): PASS in {elapsed:.2?}");
}

fn single_dir(out: &Path) -> std::path::PathBuf {
    let mut entries: Vec<_> = std::fs::read_dir(out).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(entries.len(), 1);
    entries.pop().unwrap()
}
