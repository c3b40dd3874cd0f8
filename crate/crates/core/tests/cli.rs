//! Command-level tests over the compiled binary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sonoreid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sonoreid"))
        .args(args)
        .output()
        .expect("spawn sonoreid")
}

fn ok(args: &[&str]) -> Output {
    let out = sonoreid(args);
    assert!(
        out.status.success(),
        "sonoreid {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout JSON")
}

fn synth_gallery(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut args = vec![
        "synth",
        "--out",
        path.to_str().unwrap(),
        "--patients",
        "20",
        "--dim",
        "8",
        "--seed",
        "3",
    ];
    args.extend(extra);
    ok(&args);
    path
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth_gallery(dir.path(), "a.jsonl", &[]);
    let b = synth_gallery(dir.path(), "b.jsonl", &[]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn synth_zero_patients_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.jsonl");
    let out = sonoreid(&["synth", "--out", path.to_str().unwrap(), "--patients", "0"]);
    assert!(!out.status.success());
    assert!(!path.exists());
}

#[test]
fn seed_env_variable_overrides_default() {
    let dir = tempfile::tempdir().unwrap();
    let flagged = synth_gallery(dir.path(), "flag.jsonl", &[]);
    let env_path = dir.path().join("env.jsonl");
    let out = Command::new(env!("CARGO_BIN_EXE_sonoreid"))
        .args([
            "synth",
            "--out",
            env_path.to_str().unwrap(),
            "--patients",
            "20",
            "--dim",
            "8",
        ])
        .env("SONOREID_SEED", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(
        std::fs::read(&flagged).unwrap(),
        std::fs::read(&env_path).unwrap()
    );
}

type Clusters = BTreeMap<String, Vec<Vec<String>>>;

fn read_clusters(path: &Path) -> Clusters {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn huge_tau_gives_one_cluster_per_patient() {
    let dir = tempfile::tempdir().unwrap();
    let gallery = synth_gallery(dir.path(), "g.jsonl", &[]);
    let clusters = dir.path().join("c.json");
    ok(&[
        "cluster",
        "--gallery",
        gallery.to_str().unwrap(),
        "--out",
        clusters.to_str().unwrap(),
        "--tau",
        "1000",
    ]);
    for groups in read_clusters(&clusters).values() {
        assert_eq!(groups.len(), 1);
    }
}

#[test]
fn dbscan_cli_matches_threshold_fixpoint() {
    let dir = tempfile::tempdir().unwrap();
    let gallery = synth_gallery(dir.path(), "g.jsonl", &[]);
    let a = dir.path().join("threshold.json");
    let b = dir.path().join("dbscan.json");
    ok(&[
        "cluster", "--gallery", gallery.to_str().unwrap(), "--out", a.to_str().unwrap(),
        "--algo", "threshold", "--mode", "fixpoint", "--metric", "euclidean", "--tau", "0.4",
    ]);
    ok(&[
        "cluster", "--gallery", gallery.to_str().unwrap(), "--out", b.to_str().unwrap(),
        "--algo", "dbscan", "--eps", "0.4", "--min-pts", "1", "--metric", "euclidean",
    ]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn malformed_gallery_line_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let gallery = dir.path().join("bad.jsonl");
    let record = r#"{"tracklet_id":"t_ID","patient_id":"p1","nodule_id":null,"length_frames":2,"embedding":[1.0,0.0]}"#;
    let lines = [
        record.replace("t_ID", "t1"),
        record.replace("t_ID", "t2"),
        "{not json".to_string(),
    ];
    std::fs::write(&gallery, lines.join("\n")).unwrap();
    let clusters = dir.path().join("c.json");
    let out = sonoreid(&[
        "cluster",
        "--gallery",
        gallery.to_str().unwrap(),
        "--out",
        clusters.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 3"), "stderr: {stderr}");
}

#[test]
fn eval_cluster_against_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let gallery = synth_gallery(dir.path(), "g.jsonl", &[]);
    // ground-truth clusters straight from the nodule ids
    let g = sonoreid::io::read_gallery(&gallery).unwrap();
    let mut truth: Clusters = BTreeMap::new();
    for (patient, idx) in g.patients() {
        let mut by_nodule: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for i in idx {
            let rec = &g.records()[i];
            by_nodule
                .entry(rec.nodule_id.clone().unwrap())
                .or_default()
                .push(rec.tracklet_id.clone());
        }
        truth.insert(patient, by_nodule.into_values().collect());
    }
    let clusters = dir.path().join("truth.json");
    std::fs::write(&clusters, serde_json::to_vec(&truth).unwrap()).unwrap();
    let out = ok(&[
        "eval-cluster",
        "--clusters",
        clusters.to_str().unwrap(),
        "--gallery",
        gallery.to_str().unwrap(),
    ]);
    let report = stdout_json(&out);
    assert_eq!(report["f_score"], 1.0);
    assert_eq!(report["recall"], 1.0);
}

fn write_scores(path: &Path, rows: &[(f64, u8)]) {
    let lines: Vec<String> = rows
        .iter()
        .enumerate()
        .map(|(i, (score, label))| {
            format!(
                r#"{{"pair_id":"pr{i}","id_a":"a{i}","id_b":"b{i}","score":{score},"label":{label}}}"#
            )
        })
        .collect();
    std::fs::write(path, lines.join("\n")).unwrap();
}

#[test]
fn eval_pairs_self_comparison_and_perfect_separation() {
    let dir = tempfile::tempdir().unwrap();
    let scores = dir.path().join("s.jsonl");
    let rows: Vec<(f64, u8)> = (0..40)
        .map(|i| (i as f64 / 40.0, u8::from(i >= 20)))
        .collect();
    write_scores(&scores, &rows);
    let out = ok(&[
        "eval-pairs",
        "--scores",
        scores.to_str().unwrap(),
        "--compare",
        scores.to_str().unwrap(),
        "--threshold",
        "0.5",
    ]);
    let report = stdout_json(&out);
    assert_eq!(report["auc"], 1.0);
    assert_eq!(report["auc_ci95"][0], 1.0);
    assert_eq!(report["auc_ci95"][1], 1.0);
    assert_eq!(report["delong"]["p_value"], 1.0);
}

#[test]
fn eval_pairs_detects_perturbed_model() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng_state = 88172645463325252u64;
    let mut noise = || {
        // xorshift into (-0.5, 0.5), good enough for a fixture
        rng_state ^= rng_state << 13;
        rng_state ^= rng_state >> 7;
        rng_state ^= rng_state << 17;
        (rng_state % 1000) as f64 / 1000.0 - 0.5
    };
    let clean: Vec<(f64, u8)> = (0..200)
        .map(|i| {
            let label = u8::from(i % 2 == 0);
            (label as f64 + 0.2 * noise(), label)
        })
        .collect();
    let noisy: Vec<(f64, u8)> = clean.iter().map(|&(s, l)| (s + 2.5 * noise(), l)).collect();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    write_scores(&a, &clean);
    write_scores(&b, &noisy);
    let out = ok(&[
        "eval-pairs",
        "--scores",
        a.to_str().unwrap(),
        "--compare",
        b.to_str().unwrap(),
    ]);
    let report = stdout_json(&out);
    assert!(report["delong"]["p_value"].as_f64().unwrap() < 0.05);
}

#[test]
fn bench_single_algo_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let gallery = synth_gallery(dir.path(), "g.jsonl", &[]);
    let out = ok(&[
        "bench",
        "--gallery",
        gallery.to_str().unwrap(),
        "--algos",
        "threshold",
        "--reps",
        "3",
        "--tau",
        "0.2",
    ]);
    let report = stdout_json(&out);
    assert_eq!(report["rows"].as_array().unwrap().len(), 1);
    assert_eq!(report["rows"][0]["algorithm"], "threshold");
}

fn write_pk_batch(path: &Path) {
    // four embeddings on a line, two classes; batch-hard triplet value 0.8
    // at margin 0.3: hinges 0 + 0.7 + 0.1 + 0
    let rows = [
        (0usize, 0.0, "[2.0,1.0]"),
        (0, 1.0, "[2.0,1.0]"),
        (1, 1.6, "[0.5,2.5]"),
        (1, 2.0, "[0.5,2.5]"),
    ];
    let lines: Vec<String> = rows
        .iter()
        .map(|(label, x, logits)| {
            format!(r#"{{"label":{label},"embedding":[{x}],"logits":{logits}}}"#)
        })
        .collect();
    std::fs::write(path, lines.join("\n")).unwrap();
}

#[test]
fn loss_fixture_matches_frozen_value() {
    let dir = tempfile::tempdir().unwrap();
    let batch = dir.path().join("batch.jsonl");
    write_pk_batch(&batch);
    let out = ok(&[
        "loss",
        "--batch",
        batch.to_str().unwrap(),
        "--objective",
        "trihard",
        "--margin-triplet",
        "0.3",
    ]);
    let report = stdout_json(&out);
    assert!((report["value"].as_f64().unwrap() - 0.8).abs() < 1e-10);
}

#[test]
fn combined_loss_equals_sum_of_components() {
    let dir = tempfile::tempdir().unwrap();
    let batch = dir.path().join("batch.jsonl");
    write_pk_batch(&batch);
    let run = |objective: &str| -> serde_json::Value {
        stdout_json(&ok(&[
            "loss",
            "--batch",
            batch.to_str().unwrap(),
            "--objective",
            objective,
            "--margin-triplet",
            "0.3",
        ]))
    };
    let combined = run("combined-class");
    let trihard = run("trihard")["value"].as_f64().unwrap();
    let classification = run("classification")["value"].as_f64().unwrap();
    let total = combined["value"].as_f64().unwrap();
    assert!((total - (trihard + classification)).abs() < 1e-12);
    assert_eq!(
        combined["components"]["trihard"].as_f64().unwrap(),
        trihard
    );
}
