use std::path::Path;
use std::process::{Command, Output};

fn scenemotion(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scenemotion"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_prints_artifacts_and_eval_reads_them() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let out = scenemotion(&[
        "run",
        "--scene",
        "builtin:test-room",
        "--actions",
        "sit,stand",
        "--samples",
        "2",
        "--field",
        "random",
        "--out",
        path_str(&run),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let listed = String::from_utf8(out.stdout).unwrap();
    assert_eq!(listed.lines().count(), 5);
    for line in listed.lines() {
        assert!(Path::new(line).exists(), "{line}");
    }

    let report = run.join("eval.json");
    let out = scenemotion(&[
        "eval",
        "--paths",
        path_str(&run.join("paths.json")),
        "--trajectories",
        path_str(&run.join("trajectories.json")),
        "--scene",
        "builtin:test-room",
        "--out",
        path_str(&report),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["path_deviation"].as_array().unwrap().len(), 2);
    assert!(v["non_collision"].as_f64().unwrap() <= 1.0);

    let obj = dir.path().join("scene.obj");
    let out = scenemotion(&[
        "export-obj",
        "--scene",
        "builtin:test-room",
        "--trajectories",
        path_str(&run.join("trajectories.json")),
        "--out",
        path_str(&obj),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read_to_string(&obj)
        .unwrap()
        .lines()
        .any(|l| l.starts_with("l ")));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = scenemotion(&["run", "--scene", "builtin:test-room", "--actions", "fly"]);
    assert_eq!(code(&out), 2);

    let out = scenemotion(&["run", "--scene", "builtin:test-room"]);
    assert_eq!(code(&out), 2, "empty action list");

    let cfg = dir.path().join("bad.json");
    std::fs::write(
        &cfg,
        r#"{"scene": "builtin:test-room", "actions": ["sit"], "cell_size": -1}"#,
    )
    .unwrap();
    let out = scenemotion(&["run", "--config", path_str(&cfg)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cell_size"));

    let run = dir.path().join("few");
    let out = scenemotion(&[
        "run",
        "--scene",
        "builtin:two-seats",
        "--actions",
        "sit",
        "--out",
        path_str(&run),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = scenemotion(&["eval", "--anchors", path_str(&run.join("anchors.json"))]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("fewer points than K"));
}

#[test]
fn scene_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.obj");
    let out = scenemotion(&["run", "--scene", path_str(&missing), "--actions", "sit"]);
    assert_eq!(code(&out), 3);

    let broken = dir.path().join("broken.obj");
    std::fs::write(&broken, "v 0 0 0\nv 1 0 0\nf 1 2 7\n").unwrap();
    let out = scenemotion(&["run", "--scene", path_str(&broken), "--actions", "sit"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn unreachable_anchor_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let out = scenemotion(&[
        "run",
        "--scene",
        "builtin:walled-off",
        "--actions",
        "stand,sit",
        "--out",
        path_str(&run),
    ]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("planner"));
    assert!(!run.exists());
}

#[test]
fn train_writes_checkpoint_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("pose.json");
    let args = [
        "train",
        "pose",
        "--seed",
        "3",
        "--epochs",
        "1",
        "--out",
        path_str(&ckpt),
    ];
    let out = scenemotion(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let first = std::fs::read(&ckpt).unwrap();
    assert!(dir.path().join("pose.loss.json").exists());

    let out = scenemotion(&args);
    assert_eq!(code(&out), 0);
    assert_eq!(std::fs::read(&ckpt).unwrap(), first);

    let out = scenemotion(&["train", "pose", "--epochs", "0", "--out", path_str(&ckpt)]);
    assert_eq!(code(&out), 2);
}
