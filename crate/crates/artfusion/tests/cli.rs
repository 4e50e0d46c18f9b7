use std::path::Path;
use std::process::{Command, Output};

fn artfusion(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_artfusion")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn make_scene_run_and_metrics() {
    let scene = tempfile::tempdir().unwrap();
    let run = tempfile::tempdir().unwrap();
    let out = artfusion(&["make-scene", "--preset", "bending-pipe", "--frames", "3", "--out", path(scene.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(scene.path().join("gt_markers.csv").is_file());

    let input = format!("--input.path={}", path(scene.path()));
    let output = format!("--output.dir={}", path(run.path()));
    let out = artfusion(&["run", &input, &output]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("processed 3 frames"));
    for f in ["run.log", "report.csv", "config.txt", "frame_0002.ply", "labels_0002.csv", "warp_0002.csv"] {
        assert!(run.path().join(f).is_file(), "{f}");
    }

    let out = artfusion(&["metrics", "--run", path(run.path()), "--truth", path(scene.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("segmentation_accuracy="));
}

#[test]
fn config_file_then_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "input.preset=two-box-hinge\ninput.frames=2\nsolver.omega_reg=5\n").unwrap();
    let output = format!("--output.dir={}", path(&dir.path().join("out")));
    let out = artfusion(&["run", "--config", path(&cfg), "--input.frames=1", &output]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let written = std::fs::read_to_string(dir.path().join("out/config.txt")).unwrap();
    assert!(written.contains("input.frames=1"));
    assert!(written.contains("solver.omega_reg=5"));
}

#[test]
fn config_errors_exit_4() {
    assert_eq!(code(&artfusion(&["run", "--solver.no_such_key=1"])), 4);
    assert_eq!(code(&artfusion(&["run", "--graph.node_spacing=-1"])), 4);
    assert_eq!(code(&artfusion(&["run", "--input.preset=octopus"])), 4);
    let dir = tempfile::tempdir().unwrap();
    let out = artfusion(&["make-scene", "--preset", "octopus", "--out", path(dir.path())]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("two-box-hinge"));
}

#[test]
fn io_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = format!("--input.path={}", path(&dir.path().join("nowhere")));
    assert_eq!(code(&artfusion(&["run", &missing])), 3);
    let out = artfusion(&["metrics", "--run", path(dir.path()), "--truth", path(dir.path())]);
    assert_eq!(code(&out), 3);
}

#[test]
fn lost_tracking_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = artfusion(&["make-scene", "--frames", "2", "--out", path(dir.path())]);
    assert_eq!(code(&out), 0);
    // Blank the second frame.
    let second = dir.path().join("depth_0001.raw");
    let len = std::fs::metadata(&second).map(|m| m.len()).unwrap_or(0);
    assert!(len > 0, "expected {}", second.display());
    std::fs::write(&second, vec![0u8; len as usize]).unwrap();
    let out = artfusion(&["run", &format!("--input.path={}", path(dir.path()))]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("frame 1"));
}
