//! Exit codes, report contents and persistence of the `abguard` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use abguard::cli::PersistedMonitorState;
use abguard::sim::{inject_ghost_leakage, sample_multinomial, stream_rng};
use abguard::validate::BucketCounts;
use serde_json::Value;
use tempfile::TempDir;

fn abguard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abguard"))
        .args(args)
        .env_remove("ABGUARD_VALIDATE_ALPHA")
        .env_remove("ABGUARD_K")
        .env_remove("ABGUARD_SRM_ALPHA")
        .env_remove("ABGUARD_SRM_BETA")
        .env_remove("ABGUARD_DELTA")
        .env_remove("ABGUARD_EVAL_ALPHA")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn fixture(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
        .to_string_lossy()
        .into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_counts(path: &Path, counts: &[u64]) {
    let mut text = String::from("bucket,count\n");
    for (b, c) in counts.iter().enumerate() {
        text.push_str(&format!("{b},{c}\n"));
    }
    fs::write(path, text).unwrap();
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn validate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let ok = abguard(&["validate", &fixture("accept/uniform.csv")]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    let report = json(&ok);
    assert_eq!(report["tool"], "abguard");
    assert_eq!(report["command"], "validate");
    assert_eq!(report["result"]["alert"], false);
    assert_eq!(report["config"]["k"], 2);

    let mut counts = vec![30_000u64; 100];
    counts[7] = 0;
    let hole = dir.path().join("hole.csv");
    write_counts(&hole, &counts);
    let alert = abguard(&["validate", s(&hole)]);
    assert_eq!(code(&alert), 2);
    assert_eq!(json(&alert)["result"]["statistic"], "inf");

    let bad = abguard(&["validate", &fixture("reject/negative_count.csv")]);
    assert_eq!(code(&bad), 1);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("negative_count.csv"));

    assert_eq!(code(&abguard(&["validate", "/no/such/file.csv"])), 1);
    assert_eq!(code(&abguard(&["validate", &fixture("accept/uniform.csv"), "--alpha", "1.5"])), 1);
    assert_eq!(code(&abguard(&["validate", &fixture("accept/uniform.csv"), "--k", "0"])), 1);
    assert_eq!(code(&abguard(&["frobnicate"])), 1);
    assert_eq!(code(&abguard(&["--help"])), 0);
}

#[test]
fn validate_leakage_lists_deviations() {
    let dir = TempDir::new().unwrap();
    let mut rng = stream_rng(7, 1, 0);
    let base = sample_multinomial(&mut rng, 30_000_000, &[0.01; 100]).unwrap();
    let base = BucketCounts::new(base).unwrap();
    let targets: Vec<usize> = (0..20).collect();
    let leaked = inject_ghost_leakage(&base, 0.003, &targets, &mut rng).unwrap();
    let csv = dir.path().join("leak.csv");
    write_counts(&csv, leaked.counts());
    let report = dir.path().join("r.json");
    let o = abguard(&["validate", s(&csv), "--report", s(&report)]);
    assert_eq!(code(&o), 2);
    let summary = String::from_utf8_lossy(&o.stdout);
    assert_eq!(summary.matches("  bucket ").count(), 5, "{summary}");
    let r: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let dev = r["result"]["per_bucket_deviation"].as_array().unwrap();
    assert_eq!(dev.len(), 100);
    assert!(dev[..20].iter().all(|d| d.as_f64().unwrap() > 0.0));
}

#[test]
fn monitor_desk_example_fires_low() {
    let o = abguard(&["monitor", &fixture("accept/desk.jsonl")]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    let state = &r["result"]["experiments"]["desk"]["aggregate"]["state"];
    assert_eq!(state["direction"], "low");
    assert_eq!(state["first_alert_day"], 1);
    assert_eq!(r["result"]["fired"][0], "desk");
    for variant in ["gaussian", "exact"] {
        let o = abguard(&["monitor", &fixture("accept/desk.jsonl"), "--variant", variant]);
        assert_eq!(code(&o), 2);
    }
}

#[test]
fn monitor_rerun_is_idempotent() {
    let dir = TempDir::new().unwrap();
    let state = dir.path().join("state.json");
    let (r1, r2) = (dir.path().join("r1.json"), dir.path().join("r2.json"));
    let input = fixture("accept/segmented.jsonl");
    let first = abguard(&["monitor", &input, "--by-segment", "--state", s(&state), "--report", s(&r1)]);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    let state_once = fs::read(&state).unwrap();
    let second = abguard(&["monitor", &input, "--by-segment", "--state", s(&state), "--report", s(&r1)]);
    assert_eq!(code(&second), 0);
    fs::copy(&r1, &r2).unwrap();
    let third = abguard(&["monitor", &input, "--by-segment", "--state", s(&state), "--report", s(&r1)]);
    assert_eq!(code(&third), 0);
    assert_eq!(fs::read(&r1).unwrap(), fs::read(&r2).unwrap());
    assert_eq!(state_once, fs::read(&state).unwrap());

    let saved = PersistedMonitorState::load(&state).unwrap();
    assert_eq!(saved.get("exp-7", "ios").last_day, Some(2));
    assert_eq!(saved.get("exp-7", "all").last_day, Some(2));
}

#[test]
fn corrupt_state_is_left_alone() {
    let dir = TempDir::new().unwrap();
    let state = dir.path().join("state.json");
    fs::write(&state, b"{ not json").unwrap();
    let o = abguard(&["monitor", &fixture("accept/desk.jsonl"), "--state", s(&state)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("state.json"));
    assert_eq!(fs::read(&state).unwrap(), b"{ not json");
}

#[test]
fn fired_experiment_keeps_first_alert_day() {
    let dir = TempDir::new().unwrap();
    let state = dir.path().join("state.json");
    let input = dir.path().join("snap.jsonl");
    let day1 = r#"{"experiment_id":"desk","day":1,"x_t":2108,"x_c":3183,"r_t":1,"r_c":1}"#;
    fs::write(&input, format!("{day1}\n")).unwrap();
    assert_eq!(code(&abguard(&["monitor", s(&input), "--state", s(&state)])), 2);

    let more = [
        day1,
        r#"{"experiment_id":"desk","day":2,"x_t":7000,"x_c":7000,"r_t":1,"r_c":1}"#,
        r#"{"experiment_id":"desk","day":3,"x_t":12000,"x_c":11000,"r_t":1,"r_c":1}"#,
    ];
    fs::write(&input, more.join("\n") + "\n").unwrap();
    let o = abguard(&["monitor", s(&input), "--state", s(&state)]);
    assert_eq!(code(&o), 2);
    let r = json(&o);
    let agg = &r["result"]["experiments"]["desk"]["aggregate"];
    assert_eq!(agg["state"]["first_alert_day"], 1);
    assert_eq!(agg["state"]["last_day"], 3);
    assert_eq!(agg["decisions"][1]["outcome"], "already_fired");
    assert_eq!(agg["decisions"][2]["outcome"], "already_fired");
}

#[test]
fn state_round_trips_through_disk() {
    let dir = TempDir::new().unwrap();
    let state = dir.path().join("state.json");
    abguard(&["monitor", &fixture("accept/segmented.jsonl"), "--by-segment", "--state", s(&state)]);
    let bytes = fs::read(&state).unwrap();
    let loaded = PersistedMonitorState::load(&state).unwrap();
    let again = dir.path().join("again.json");
    loaded.save(&again).unwrap();
    assert_eq!(bytes, fs::read(&again).unwrap());
    assert_eq!(PersistedMonitorState::load(&again).unwrap(), loaded);
}

fn small_buckets(out: &Path, seed: &str) -> Output {
    abguard(&[
        "simulate", "--kind", "buckets", "--out", s(out), "--seed", seed,
        "--negatives", "20", "--positives", "10", "--mean-total", "300000",
    ])
}

fn tree_bytes(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn simulate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert_eq!(code(&small_buckets(&a, "11")), 0);
    assert_eq!(code(&small_buckets(&b, "11")), 0);
    assert_eq!(code(&small_buckets(&c, "12")), 0);
    let ta = tree_bytes(&a);
    assert_eq!(ta.len(), 32);
    assert_eq!(ta, tree_bytes(&b));
    assert_ne!(ta, tree_bytes(&c));

    let labels = fs::read_to_string(a.join("labels.csv")).unwrap();
    assert_eq!(labels.lines().next(), Some("case,file,label"));
    assert_eq!(labels.lines().count(), 31);

    let eval = abguard(&["evaluate", "--manifest", s(&a.join("manifest.json"))]);
    assert_eq!(code(&eval), 0, "{}", String::from_utf8_lossy(&eval.stderr));
}

#[test]
fn noise_sweep_writes_a_manifest_per_level() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sweep");
    let o = abguard(&[
        "simulate", "--kind", "noise-sweep", "--out", s(&out), "--negatives", "5",
        "--positives", "5", "--mean-total", "100000",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let manifests = tree_bytes(&out)
        .into_iter()
        .filter(|(p, _)| p.file_name().is_some_and(|n| n == "manifest.json"))
        .count();
    // One per lambda in 0..=10 plus the sweep's own.
    assert_eq!(manifests, 12);
    let top: Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(top["kind"], "noise-sweep");
    assert_eq!(top["lambdas"].as_array().unwrap().len(), 11);
}

#[test]
fn srm_series_round_trip_through_evaluate() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("srm");
    let o = abguard(&[
        "simulate", "--kind", "srm-series", "--out", s(&out), "--series", "40", "--days", "10",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = dir.path().join("bins.csv");
    let report = dir.path().join("eval.json");
    let e = abguard(&[
        "evaluate", "--manifest", s(&out.join("manifest.json")), "--csv", s(&csv),
        "--report", s(&report),
    ]);
    assert_eq!(code(&e), 0, "{}", String::from_utf8_lossy(&e.stderr));
    let bins = fs::read_to_string(&csv).unwrap();
    assert_eq!(bins.lines().next(), Some("bin,min_total,max_total,positives,detector,recall"));
    let r: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["result"]["kind"], "srm-series");
    assert_eq!(r["result"]["report"]["series"], 40);

    // Snapshots written by simulate are valid monitor input.
    let m = abguard(&["monitor", s(&out.join("snapshots.jsonl"))]);
    assert!(matches!(code(&m), 0 | 2));
}

#[test]
fn evaluate_rejects_inconsistent_manifest() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("ds");
    assert_eq!(code(&small_buckets(&out, "5")), 0);
    let path = out.join("manifest.json");
    let mut m: Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    m["cases"] = Value::from(31);
    fs::write(&path, serde_json::to_vec_pretty(&m).unwrap()).unwrap();
    let e = abguard(&["evaluate", "--manifest", s(&path)]);
    assert_eq!(code(&e), 1);

    fs::write(&path, b"{\"kind\":\"mystery\"}").unwrap();
    assert_eq!(code(&abguard(&["evaluate", "--manifest", s(&path)])), 1);
}

#[test]
fn environment_overrides_defaults() {
    let o = Command::new(env!("CARGO_BIN_EXE_abguard"))
        .args(["validate", &fixture("accept/uniform.csv")])
        .env("ABGUARD_K", "5")
        .env("ABGUARD_VALIDATE_ALPHA", "0.01")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert_eq!(r["config"]["k"], 5);
    assert_eq!(r["config"]["alpha"], 0.01);
}
