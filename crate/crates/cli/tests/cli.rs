use std::fs;
use std::process::Command;

fn avem() -> Command {
    Command::new(env!("CARGO_BIN_EXE_avem"))
}

#[test]
fn run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = avem()
        .args(["run", "--problem", "square-smooth", "--lambda", "2", "--eps0", "1", "--tol", "0.5", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("passes"));
    for name in [
        "convergence.csv",
        "data.csv",
        "passes.csv",
        "stats.txt",
        "mesh_data.svg",
        "mesh_final.svg",
        "bisections.svg",
        "mesh_data.txt",
        "mesh_final.txt",
        "solution.csv",
    ] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
    let passes = fs::read_to_string(dir.path().join("passes.csv")).unwrap();
    assert_eq!(passes.lines().count(), 1 + 2);
}

#[test]
fn mesh_export_round_trips_through_the_text_format() {
    let dir = tempfile::tempdir().unwrap();
    let txt = dir.path().join("initial.txt");
    let status = avem().args(["mesh", "export", "--fmt", "txt", "--problem", "lshape", "--out"]).arg(&txt).status().unwrap();
    assert!(status.success());
    let again = dir.path().join("again.txt");
    let status = avem().args(["mesh", "export", "--fmt", "txt", "--input"]).arg(&txt).arg("--out").arg(&again).status().unwrap();
    assert!(status.success());
    assert_eq!(fs::read(&txt).unwrap(), fs::read(&again).unwrap());

    let svg = dir.path().join("initial.svg");
    let status = avem().args(["mesh", "export", "--fmt", "svg", "--input"]).arg(&txt).arg("--out").arg(&svg).status().unwrap();
    assert!(status.success());
    assert!(fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn greedy_on_a_constant_reports_no_rate() {
    let out = avem().args(["greedy", "--target", "one", "--delta-steps", "3", "--h", "0.5"]).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 1 + 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("undefined"));
}

#[test]
fn failures_exit_nonzero() {
    let bad_problem = avem().args(["run", "--problem", "nowhere", "--out", "/tmp/unused"]).output().unwrap();
    assert!(!bad_problem.status.success());
    assert!(String::from_utf8_lossy(&bad_problem.stderr).contains("unknown problem"));

    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.txt");
    fs::write(&broken, "avem-mesh 1\nnodes 1\n0 0.0 0.0 proper - - 0\n").unwrap();
    let out = avem().args(["mesh", "export", "--fmt", "svg", "--input"]).arg(&broken).args(["--out", "/tmp/unused.svg"]).output().unwrap();
    assert!(!out.status.success());

    let cap = avem()
        .args(["run", "--problem", "square-smooth", "--theta", "1.5", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!cap.status.success());
}
