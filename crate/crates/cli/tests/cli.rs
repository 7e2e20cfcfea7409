use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use serde_json::Value;

fn tiltpump(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tiltpump")).args(args).env("TILTPUMP_THREADS", "1").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn list_shows_every_experiment() {
    let o = tiltpump(&["list"]);
    assert!(o.status.success());
    let ids: Vec<String> = stdout(&o).lines().filter_map(|l| l.split_whitespace().next().map(str::to_string)).collect();
    assert_eq!(
        ids,
        [
            "bands",
            "semiclassical",
            "wavepackets",
            "phase-diagram",
            "transition-scan",
            "scattering",
            "resonant",
            "obc",
            "momentum",
            "doublon-model"
        ]
    );
}

#[test]
fn describe_prints_defaults() {
    let o = tiltpump(&["describe", "scattering"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("\"sites\": 58"), "{text}");
    assert!(text.contains("regression checks"));
    assert!(text.contains("\"l1\": 21"));
}

#[test]
fn unknown_experiment_suggests_a_name() {
    let o = tiltpump(&["describe", "scatering"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("did you mean `scattering`"), "{}", stderr(&o));
    let o = tiltpump(&["run", "zzz"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("typo.json", r#"{"params": {"sitez": 10}}"#),
        ("controls.json", r#"{"controls": {"nk_typo": 3}}"#),
        ("schema.json", r#"{"schema": 7}"#),
        ("odd.json", r#"{"params": {"sites": 11}}"#),
        ("other.json", r#"{"experiment": "obc"}"#),
    ];
    for (name, text) in cases {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        let out = dir.path().join("out");
        let o = tiltpump(&["run", "bands", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{name}: {}", stderr(&o));
        assert!(!out.join("manifest.json").exists(), "{name}");
    }
}

const TINY: &str = r#"{
  "experiment": "bands",
  "params": {"sites": 10},
  "controls": {"nk": 6, "nt": 12, "cut_points": 20, "fhs_nk": 8, "fhs_nt": 24, "fhs_verify": false}
}"#;

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn tiny_run_is_fast_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.json");
    std::fs::write(&cfg, TINY).unwrap();
    let mut manifests = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let start = Instant::now();
        let o = tiltpump(&["run", "bands", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(start.elapsed().as_secs_f64() < 5.0);
        // Checks may fail on so coarse a grid, but the run itself must finish.
        assert!(matches!(o.status.code(), Some(0 | 1)), "{}", stderr(&o));
        assert!(stdout(&o).contains("bands:"));
        assert!(out.join("bands.csv").exists());
        manifests.push(manifest(&out));
    }
    let (a, b) = (&manifests[0], &manifests[1]);
    assert_eq!(a["params"]["sites"], 10);
    assert_eq!(a["controls"]["nk"], 6);
    assert_eq!(a["controls"]["clusters"], 5);
    assert_eq!(a["threads"], 1);
    assert!(!a["files"].as_array().unwrap().is_empty());
    assert_eq!(a["files"], b["files"]);
    assert_eq!(a["checks"], b["checks"]);
}

#[test]
fn emit_switches_skip_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.json");
    let text = TINY.replacen("\"experiment\"", "\"emit\": {\"svg\": false, \"csv\": false},\n  \"experiment\"", 1);
    std::fs::write(&cfg, text).unwrap();
    let out = dir.path().join("o");
    let o = tiltpump(&["run", "bands", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", stderr(&o));
    let m = manifest(&out);
    for f in m["files"].as_array().unwrap() {
        let p = f["path"].as_str().unwrap();
        assert!(p.ends_with(".json"), "{p}");
    }
}
