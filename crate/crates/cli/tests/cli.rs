use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(format!("{name}.scene.json"))
}

fn fundom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fundom")).args(args).output().expect("binary runs")
}

fn run(command: &str, scene: &Path, extra: &[&str]) -> Output {
    let mut args = vec![command, scene.to_str().unwrap()];
    args.extend_from_slice(extra);
    fundom(&args)
}

fn report(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn assert_svg(path: &Path) {
    let text = fs::read_to_string(path).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    assert_eq!(doc.root_element().attribute("version"), Some("1.1"));
}

#[test]
fn torus_domain_writes_report_and_figure() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("fundamental-domain", &fixture("torus"), &["--seed", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "pass");
    assert_eq!(report["report"]["connected"], true);
    assert_svg(&dir.path().join("tiles.svg"));
}

#[test]
fn scaling_action_is_not_proper() {
    let out = run("check-properness", &fixture("ex1"), &[]);
    assert_eq!(out.status.code(), Some(2));
    let r = report(&out);
    assert_eq!(r["verdict"], "not-proper");
    assert!(r["witness"].is_object());
}

#[test]
fn lattice_properness_passes() {
    let out = run("check-properness", &fixture("torus"), &[]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["transporter"]["verdict"], "bounded-observed");
}

#[test]
fn heuristic_enumeration_is_inconclusive() {
    let out = run("quotient-dist", &fixture("schottky"), &["--samples", "200"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!report(&out)["caveats"].as_array().unwrap().is_empty());
}

#[test]
fn cross_dirichlet_closure_fails() {
    let out = run("dirichlet", &fixture("cross"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&out)["closure"]["pass"], false);
}

#[test]
fn malformed_scenes_exit_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(fixture("torus")).unwrap().replace("\"radius\": 3", "\"radius\": \"3\"");
    let path = dir.path().join("bad.scene.json");
    fs::write(&path, text).unwrap();
    let out = run("fundamental-domain", &path, &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line") && err.contains("window.radius"), "{err}");

    fs::write(&path, "{ not json").unwrap();
    assert_eq!(run("voronoi", &path, &[]).status.code(), Some(1));
    assert_eq!(run("voronoi", &dir.path().join("missing.json"), &[]).status.code(), Some(1));
}

#[test]
fn generators_must_act_on_the_scene_space() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(fixture("cycle4")).unwrap().replace("[2, 3, 0, 1]", "[1, 0, 2, 3]");
    let path = dir.path().join("bad.scene.json");
    fs::write(&path, text).unwrap();
    assert_eq!(run("dirichlet", &path, &[]).status.code(), Some(1));
}

#[test]
fn figures_are_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["torus", "klein", "schottky", "ex1", "trivial"] {
        for command in ["voronoi", "dirichlet"] {
            let svg = dir.path().join(format!("{name}-{command}.svg"));
            let out = run(command, &fixture(name), &["--samples", "200", "--svg", svg.to_str().unwrap()]);
            assert_ne!(out.status.code(), Some(1), "{name} {command}: {}", String::from_utf8_lossy(&out.stderr));
            assert_svg(&svg);
        }
    }
    let svg = dir.path().join("schottky-domain.svg");
    run("fundamental-domain", &fixture("schottky"), &["--samples", "1000", "--svg", svg.to_str().unwrap()]);
    assert_svg(&svg);
}

#[test]
fn reports_are_reproducible() {
    for name in ["klein", "cycle4", "cross"] {
        for command in ["quotient-dist", "voronoi", "fundamental-domain"] {
            let a = run(command, &fixture(name), &["--samples", "500"]);
            let b = run(command, &fixture(name), &["--samples", "500"]);
            assert_eq!(a.status.code(), b.status.code());
            assert!(a.stdout == b.stdout, "{name} {command} differs between runs");
        }
    }
}

#[test]
fn overrides_reach_the_report() {
    let out = run("voronoi", &fixture("trivial"), &["--seed", "9", "--window-radius", "1"]);
    let r = report(&out);
    assert_eq!(r["seed"], 9);
}
