use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spacetimehap"))
        .args(args)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn result(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("out/result.json")).unwrap()).unwrap()
}

#[test]
fn classify_prints_haplike() {
    let dir = tempfile::tempdir().unwrap();
    let events = write(
        dir.path(),
        "pairs.json",
        r#"{"pairs": [[{"t": 0, "x": [0], "c": [[0], [0]]}, {"t": 1, "x": [0], "c": [[0], [3]]}],
                      [{"t": 0, "x": [0], "c": [[0], [0]]}, {"t": 1, "x": [0], "c": [[0], [0.5]]}]]}"#,
    );
    let out = run(dir.path(), &["classify", "--input", &events]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        stdout.lines().collect::<Vec<_>>(),
        ["haplike", "timelike-future-directed"]
    );
    assert_eq!(result(dir.path())["classes"][0], "haplike");
    let cfg: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/config.json")).unwrap())
            .unwrap();
    assert_eq!(cfg["schema_version"], 1);
    assert_eq!(cfg["command"], "classify");
}

#[test]
fn causal_graph_writes_exports() {
    let dir = tempfile::tempdir().unwrap();
    let events = write(
        dir.path(),
        "events.json",
        r#"{"events": [{"t": 0, "x": [0], "c": [[0]]}, {"t": 1, "x": [0], "c": [[0]]}, {"t": 2, "x": [0], "c": [[0]]}]}"#,
    );
    let out = run(dir.path(), &["causal-graph", "--input", &events, "--quiet"]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(
        fs::read_to_string(dir.path().join("out/edges.csv")).unwrap(),
        "src,dst\n0,1\n1,2\n"
    );
    assert!(dir.path().join("out/graph.dot").exists());
}

#[test]
fn missing_grid_points_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"grid": {"extents": [-5, 5]}, "state": {"kind": "product"}}"#,
    );
    let out = run(dir.path(), &["free-choice", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("grid.points"), "{err}");
    // Nothing is written when validation fails.
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_keys_and_bad_flags_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"grid": {"points": 64, "colour": "red"}}"#,
    );
    let out = run(dir.path(), &["evolve", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.colour"));
    assert_eq!(
        run(dir.path(), &["evolve", "--no-such-flag"]).status.code(),
        Some(1)
    );
    let cfg = write(
        dir.path(),
        "d.json",
        r#"{"grid": {"points": 64}, "state": {"kind": "product"}, "free_choice": {"v": 1.2}}"#,
    );
    assert_eq!(
        run(dir.path(), &["free-choice", "--config", &cfg])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn product_state_free_choice_is_unilateral() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"grid": {"points": 64}, "engine": {"dt": 0.004}, "state": {"kind": "product"}, "free_choice": {"v": 0.5}}"#,
    );
    let out = run(dir.path(), &["free-choice", "--config", &cfg, "--quiet"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = result(dir.path());
    assert_eq!(r["unilateral_for_bob"], true);
    assert!(r["ratio"].as_f64().unwrap() <= 1e-6);
    let csv = fs::read_to_string(dir.path().join("out/trajectories.csv")).unwrap();
    assert!(csv.starts_with("traj_id,t,c1,c2\n"));
}

#[test]
fn frame_change_paths_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"grid": {"points": 64}, "engine": {"dt": 0.004}, "state": {"kind": "entangled"},
            "frame_change": {"v": [0.4], "event": {"t": 0.1, "x": [0.3], "c": [[0.5], [-0.5]]},
                             "compare_potential": {"kind": "harmonic", "omega": 0.5}}}"#,
    );
    let out = run(
        dir.path(),
        &["frame-change", "--config", &cfg, "--quiet", "--plot"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = result(dir.path());
    assert!(r["path_difference"].as_f64().unwrap() < 1e-5);
    assert_eq!(r["frame_change"]["frame_v"][0], 0.4);
    assert!(r["comparison"]["max_difference"].as_f64().unwrap() > 0.0);
}

#[test]
fn plots_are_written_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"grid": {"points": 64}, "engine": {"dt": 0.004}, "state": {"kind": "product"},
            "scan": {"v_values": [0.0, 0.5], "delta_values": [0.2]}}"#,
    );
    let out = run(
        dir.path(),
        &["free-choice-scan", "--config", &cfg, "--quiet", "--plot"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(fs::read_to_string(dir.path().join("out/ratio_vs_v.svg"))
        .unwrap()
        .starts_with("<svg"));
    assert_eq!(result(dir.path())["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn version_names_the_schema() {
    let out = Command::new(env!("CARGO_BIN_EXE_spacetimehap"))
        .arg("--version")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("config schema 1"));
}
