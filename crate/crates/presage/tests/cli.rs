//! End-to-end checks of the `presage` binary: exporting the suite, recording
//! buffers, running a benchmark, and the exit-code contract (0 on
//! completion, nonzero only for configuration errors).

use std::path::{Path, PathBuf};
use std::process::Command;

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_presage")
}

fn work_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("presage-cli-test").join(name);
    std::fs::create_dir_all(&dir).expect("create work dir");
    dir
}

fn small_suite_file(dir: &Path) -> PathBuf {
    let suite: Vec<presage_core::simworld::ScenarioSpec> = presage_core::scenarios::builtin_suite()
        .into_iter()
        .filter(|s| s.task.name == "heat_potato" || s.task.name == "make_salad")
        .take(6)
        .collect();
    let path = dir.join("suite.json");
    presage::files::save_suite(&path, &suite).expect("write suite");
    path
}

#[test]
fn suite_export_and_reload() {
    let dir = work_dir("suite-export");
    let out = dir.join("builtin-suite.json");
    let status = Command::new(binary())
        .args(["suite", "--out"])
        .arg(&out)
        .status()
        .expect("spawn presage");
    assert!(status.success());
    let loaded =
        presage::files::load_suite(&out, &presage_core::vocab::Vocabulary::builtin()).unwrap();
    assert!(loaded.len() >= 50);
}

#[test]
fn demos_then_run_with_buffer() {
    let dir = work_dir("demos-run");
    let suite_path = small_suite_file(&dir);
    let buffer_path = dir.join("buffer.jsonl");

    let status = Command::new(binary())
        .args(["demos", "--suite"])
        .arg(&suite_path)
        .arg("--out")
        .arg(&buffer_path)
        .args(["--created-at", "2026-01-01T00:00:00Z"])
        .status()
        .expect("spawn presage");
    assert!(status.success());
    assert!(buffer_path.exists());

    let report_path = dir.join("report.json");
    let traces_dir = dir.join("traces");
    let output = Command::new(binary())
        .args(["run", "--suite"])
        .arg(&suite_path)
        .arg("--buffer")
        .arg(&buffer_path)
        .arg("--report")
        .arg(&report_path)
        .arg("--traces")
        .arg(&traces_dir)
        .args(["--strategies", "none,proactive+scene_graph", "--seed", "11"])
        .output()
        .expect("spawn presage");
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );

    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(
        stdout.contains("proactive+scene_graph"),
        "summary missing: {stdout}"
    );

    assert!(report_path.exists());
    assert!(report_path.with_extension("csv").exists());
    let report_text = std::fs::read_to_string(&report_path).unwrap();
    let report: presage_core::harness::Report = serde_json::from_str(&report_text).unwrap();
    assert_eq!(report.scenario_count, 6);
    assert_eq!(report.strategies.len(), 2);
    let trace_files = std::fs::read_dir(&traces_dir).unwrap().count();
    assert_eq!(trace_files, 12, "one trace per (scenario, strategy)");

    // In-world failures are results, not errors: strategy `none` failing
    // everywhere still exits 0 (asserted above).
}

#[test]
fn identical_seeds_give_identical_report_files() {
    let dir = work_dir("determinism");
    let suite_path = small_suite_file(&dir);
    let run = |tag: &str| -> Vec<u8> {
        let report_path = dir.join(format!("report-{tag}.json"));
        let status = Command::new(binary())
            .args(["run", "--suite"])
            .arg(&suite_path)
            .arg("--report")
            .arg(&report_path)
            .args(["--strategies", "proactive+scene_graph", "--seed", "99"])
            .status()
            .expect("spawn presage");
        assert!(status.success());
        std::fs::read(&report_path).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn configuration_errors_exit_nonzero() {
    let dir = work_dir("config-errors");
    let suite_path = small_suite_file(&dir);

    // Threshold outside (0, 1].
    let status = Command::new(binary())
        .args(["run", "--suite"])
        .arg(&suite_path)
        .args(["--threshold", "0.0"])
        .arg("--report")
        .arg(dir.join("r.json"))
        .status()
        .expect("spawn presage");
    assert_eq!(status.code(), Some(2));

    // Unknown strategy.
    let status = Command::new(binary())
        .args(["run", "--suite"])
        .arg(&suite_path)
        .args(["--strategies", "psychic"])
        .arg("--report")
        .arg(dir.join("r.json"))
        .status()
        .expect("spawn presage");
    assert_eq!(status.code(), Some(2));

    // Missing suite file.
    let status = Command::new(binary())
        .args(["run", "--suite"])
        .arg(dir.join("absent.json"))
        .arg("--report")
        .arg(dir.join("r.json"))
        .status()
        .expect("spawn presage");
    assert_eq!(status.code(), Some(2));

    // Missing buffer file.
    let status = Command::new(binary())
        .args(["run", "--suite"])
        .arg(&suite_path)
        .arg("--buffer")
        .arg(dir.join("absent-buffer.jsonl"))
        .arg("--report")
        .arg(dir.join("r.json"))
        .status()
        .expect("spawn presage");
    assert_eq!(status.code(), Some(2));
}

#[test]
fn sweep_and_ablations_flags_extend_the_report() {
    let dir = work_dir("sweep-ablations");
    let suite_path = small_suite_file(&dir);
    let report_path = dir.join("report.json");
    let status = Command::new(binary())
        .args(["run", "--suite"])
        .arg(&suite_path)
        .arg("--report")
        .arg(&report_path)
        .args([
            "--strategies",
            "proactive+scene_graph",
            "--sweep",
            "--ablations",
            "--seed",
            "5",
        ])
        .status()
        .expect("spawn presage");
    assert!(status.success());
    let report: presage_core::harness::Report =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report.sweep.len(), 6, "three thresholds x two detectors");
    assert_eq!(
        report.ablations.len(),
        7,
        "five toggle sets + two reasoning modes"
    );
    let csv = std::fs::read_to_string(report_path.with_extension("csv")).unwrap();
    assert!(csv.contains("threshold,detector"));
    assert!(csv.contains("label,scope"));
}
