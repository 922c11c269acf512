//! Behavior tests for the scmap binary: exit codes, config handling,
//! determinism, and the shape of emitted reports.

use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::sync::OnceLock;

use serde_json::Value;
use tempfile::TempDir;

fn scmap() -> Command {
    Command::new(env!("CARGO_BIN_EXE_scmap"))
}

fn run(args: &[&str]) -> Output {
    scmap().args(args).output().expect("spawn scmap")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// One tiny checkpoint shared by every test that needs a model.
fn checkpoint() -> &'static Path {
    static CKPT: OnceLock<(TempDir, PathBuf)> = OnceLock::new();
    let (_, path) = CKPT.get_or_init(|| {
        let dir = TempDir::new().expect("tempdir");
        let out = dir.path().join("train");
        let result = run(&[
            "train",
            "--input", "const:32x32x1",
            "--out", out.to_str().unwrap(),
            "--epochs", "20",
            "--preset", "tiny",
            "--seed", "3",
        ]);
        assert!(result.status.success(), "fixture train failed: {}", stderr_str(&result));
        (dir, out.join("codec.slnn"))
    });
    path
}

fn assert_exact_keys(v: &Value, keys: &[&str], what: &str) {
    let obj = v.as_object().unwrap_or_else(|| panic!("{what} is not an object: {v}"));
    let mut got: Vec<&str> = obj.keys().map(|k| k.as_str()).collect();
    got.sort_unstable();
    let mut want = keys.to_vec();
    want.sort_unstable();
    assert_eq!(got, want, "{what} keys");
}

#[test]
fn missing_required_flag_exits_2() {
    let out = run(&["simulate", "--input", "synth:32x32x2", "--out", "/tmp/nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_str(&out).contains("--model"));
}

#[test]
fn missing_checkpoint_exits_2() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "simulate",
        "--model", dir.path().join("absent.slnn").to_str().unwrap(),
        "--input", "synth:32x32x2",
        "--out", dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_str(&out).contains("does not exist"));
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"epoch": 5}"#).unwrap();
    let out = run(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_str(&out).contains("epoch"));
}

#[test]
fn eval_traj_against_itself_is_zero() {
    let dir = TempDir::new().unwrap();
    let traj = dir.path().join("t.txt");
    std::fs::write(&traj, "0.0 0 0 0 0 0 0 1\n0.1 1 0 0 0 0 0 1\n0.2 2 1 0 0 0 0 1\n").unwrap();
    let out = run(&["eval-traj", "--est", traj.to_str().unwrap(), "--ref", traj.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr_str(&out));
    let v: Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_exact_keys(&v, &["ate", "rpe"], "report");
    assert_exact_keys(&v["ate"], &["rmse", "mean", "max", "pairs"], "ate");
    assert_exact_keys(&v["rpe"], &["rmse", "mean", "max", "count"], "rpe");
    assert!(v["ate"]["rmse"].as_f64().unwrap() < 1e-12);
    assert!(v["rpe"]["rmse"].as_f64().unwrap() < 1e-12);
    assert_eq!(v["ate"]["pairs"], 3);
    assert_eq!(v["rpe"]["count"], 2);
}

#[test]
fn eval_traj_missing_file_exits_2_unusable_data_exits_1() {
    let dir = TempDir::new().unwrap();
    let good = dir.path().join("good.txt");
    std::fs::write(&good, "0.0 0 0 0 0 0 0 1\n0.1 1 0 0 0 0 0 1\n0.2 2 0 0 0 0 0 1\n").unwrap();

    let absent = dir.path().join("absent.txt");
    let out = run(&["eval-traj", "--est", absent.to_str().unwrap(), "--ref", good.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // Malformed rows are skipped leniently; with only one usable pose
    // left there are too few pairs to align.
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "0.0 0 0 0 0 0 0 1\nnot a pose line\ngarbage 3\n").unwrap();
    let out = run(&["eval-traj", "--est", bad.to_str().unwrap(), "--ref", good.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_str(&out).contains("insufficient overlap"), "{}", stderr_str(&out));
}

#[test]
fn train_is_deterministic_for_a_seed() {
    let dir = TempDir::new().unwrap();
    let sha = |out_dir: &Path| {
        let out = run(&[
            "train",
            "--input", "const:16x16x1",
            "--out", out_dir.to_str().unwrap(),
            "--epochs", "10",
            "--preset", "tiny",
            "--seed", "11",
        ]);
        assert!(out.status.success(), "{}", stderr_str(&out));
        stdout_str(&out)
            .lines()
            .find_map(|l| l.strip_prefix("sha256 ").map(str::to_owned))
            .expect("sha256 line")
    };
    let a = sha(&dir.path().join("a"));
    let b = sha(&dir.path().join("b"));
    assert_eq!(a, b);
}

#[test]
fn config_file_merges_under_flags() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"input": "const:16x16x1", "out": {:?}, "epochs": 9, "preset": "tiny"}}"#,
            out_dir.to_str().unwrap()
        ),
    )
    .unwrap();
    // Flag beats the file for epochs; everything else comes from the file.
    let out = run(&["train", "--config", cfg.to_str().unwrap(), "--epochs", "4"]);
    assert!(out.status.success(), "{}", stderr_str(&out));
    let log = std::fs::read_to_string(out_dir.join("train_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 1 + 4, "header plus one row per epoch");
}

#[test]
fn simulate_emits_the_documented_report_shape() {
    let model = checkpoint();
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("sim");
    let out = run(&[
        "simulate",
        "--model", model.to_str().unwrap(),
        "--input", "synth:32x32x3",
        "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_str(&out));

    let v: Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.join("metrics.json")).unwrap(),
    )
    .unwrap();
    assert_exact_keys(
        &v,
        &["mode", "snr_db", "seed", "edge", "cloud", "psnr_db", "compression", "map", "oracle"],
        "metrics",
    );
    assert_exact_keys(
        &v["edge"],
        &["frames_sent", "sync_frames", "semantic_frames", "depth_frames", "bytes_sent", "timing", "error"],
        "edge",
    );
    assert_exact_keys(
        &v["cloud"],
        &[
            "semantic_frames", "depth_frames", "pairs_mapped", "pairs_skipped_no_pose",
            "dropped_rgb", "dropped_depth", "bytes_received", "queue_high_water",
            "timing", "protocol_error",
        ],
        "cloud",
    );
    assert_exact_keys(&v["psnr_db"], &["per_frame", "mean"], "psnr");
    assert_exact_keys(&v["compression"], &["payload_bits_per_frame", "ratio"], "compression");
    assert_exact_keys(&v["map"], &["voxels", "prob_sum_max_abs_err", "ply"], "map");
    assert_exact_keys(&v["oracle"], &["matched", "total", "fraction"], "oracle");

    assert_eq!(v["edge"]["error"], Value::Null);
    assert_eq!(v["cloud"]["protocol_error"], Value::Null);
    assert_eq!(v["edge"]["semantic_frames"], 3);
    assert_eq!(v["cloud"]["pairs_mapped"], 3);
    // 3 RGB + 3 depth + end of stream; the sync frame is counted apart.
    assert_eq!(v["edge"]["frames_sent"], 7);
    assert_eq!(v["edge"]["sync_frames"], 1);
    for stage in ["encode", "write"] {
        assert_exact_keys(
            &v["edge"]["timing"][stage],
            &["count", "mean_s", "p50_s", "p95_s", "max_s"],
            stage,
        );
    }
    assert!(out_dir.join("map.ply").exists());
    assert!(out_dir.join("map.labels.json").exists());
    assert!(out_dir.join("recon_0002.ppm").exists());
}

#[test]
fn capture_file_replays_into_the_same_outputs() {
    let model = checkpoint();
    let dir = TempDir::new().unwrap();
    let sim_dir = dir.path().join("sim");
    let cap = dir.path().join("wire.cap");
    let cloud_dir = dir.path().join("cloud");

    let out = run(&[
        "simulate",
        "--model", model.to_str().unwrap(),
        "--input", "synth:32x32x4",
        "--out", sim_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_str(&out));

    let out = run(&[
        "edge",
        "--model", model.to_str().unwrap(),
        "--input", "synth:32x32x4",
        "--connect", &format!("file:{}", cap.display()),
    ]);
    assert!(out.status.success(), "{}", stderr_str(&out));

    let out = run(&[
        "cloud",
        "--model", model.to_str().unwrap(),
        "--listen", &format!("file:{}", cap.display()),
        "--input", "synth:32x32x4",
        "--out", cloud_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_str(&out));

    for name in ["map.ply", "map.labels.json", "recon_0000.ppm", "recon_0003.ppm"] {
        let a = std::fs::read(sim_dir.join(name)).unwrap();
        let b = std::fs::read(cloud_dir.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between simulate and capture replay");
    }

    let v: Value = serde_json::from_str(
        &std::fs::read_to_string(cloud_dir.join("cloud_stats.json")).unwrap(),
    )
    .unwrap();
    assert_exact_keys(&v, &["listen", "cloud", "map", "oracle"], "cloud stats");
}

#[test]
fn edge_pipes_into_cloud_over_stdio() {
    let model = checkpoint();
    let dir = TempDir::new().unwrap();
    let cloud_dir = dir.path().join("cloud");

    let mut edge = scmap()
        .args([
            "edge",
            "--model", model.to_str().unwrap(),
            "--input", "synth:32x32x2",
            "--connect", "-",
        ])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn edge");
    let wire: Stdio = edge.stdout.take().expect("edge stdout").into();

    let cloud = scmap()
        .args([
            "cloud",
            "--model", model.to_str().unwrap(),
            "--listen", "-",
            "--input", "synth:32x32x2",
            "--out", cloud_dir.to_str().unwrap(),
        ])
        .stdin(wire)
        .output()
        .expect("run cloud");

    let edge_out = edge.wait_with_output().expect("edge exit");
    assert!(edge_out.status.success(), "{}", stderr_str(&edge_out));
    assert!(cloud.status.success(), "{}", stderr_str(&cloud));
    assert!(cloud_dir.join("map.ply").exists());
}
