use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn miquel(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_miquel"))
        .args(args)
        .current_dir(dir)
        .env_remove("MIQUEL_TOL_SCALE")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn evolved_map(dir: &Path, extra: &[&str]) {
    let mut gen = vec!["generate", "--kind", "generic", "--rows", "12", "--cols", "12", "--seed", "5", "-o", "g.json"];
    gen.extend_from_slice(extra);
    assert_eq!(code(&miquel(dir, &gen)), 0);
    let mut ev = vec!["evolve", "-i", "g.json", "-o", "e.json"];
    ev.extend_from_slice(extra);
    assert_eq!(code(&miquel(dir, &ev)), 0);
}

fn report(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name)).expect("report")).expect("report json")
}

#[test]
fn pipeline_on_defaults_passes() {
    let dir = tempfile::tempdir().unwrap();
    evolved_map(dir.path(), &[]);
    let o = miquel(dir.path(), &["verify", "-i", "e.json", "-o", "r.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path(), "r.json");
    assert_eq!(r["pass"], Value::Bool(true));
    assert!(r["checks"].as_array().unwrap().len() >= 10);
}

#[test]
fn corrupted_point_fails_named_checks() {
    let dir = tempfile::tempdir().unwrap();
    evolved_map(dir.path(), &["--decimal"]);
    let path = dir.path().join("e.json");
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let target = serde_json::json!([5, 5, 2]);
    let point = doc["points"]
        .as_array_mut()
        .unwrap()
        .iter_mut()
        .find(|p| p["t"] == target)
        .expect("interior point");
    let x = point["pos"][0].as_f64().unwrap();
    point["pos"][0] = serde_json::json!(x + 0.01);
    std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();

    let o = miquel(dir.path(), &["verify", "-i", "e.json", "-o", "r.json"]);
    assert_eq!(code(&o), 1);
    let r = report(dir.path(), "r.json");
    assert_eq!(r["pass"], Value::Bool(false));
    let failed: Vec<&str> = r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == Value::Bool(false))
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failed.iter().any(|n| n.starts_with("incidence")), "{failed:?}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("incidence"));
}

#[test]
fn render_draws_every_circle() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let gen = ["generate", "--kind", "generic", "--scale", "0", "--rows", "7", "--cols", "9", "-o", "g.json"];
    assert_eq!(code(&miquel(p, &gen)), 0);
    assert_eq!(code(&miquel(p, &["render", "-i", "g.json", "--show-points", "-o", "g.svg"])), 0);
    let svg = std::fs::read_to_string(p.join("g.svg")).unwrap();
    assert_eq!(svg.matches("<circle ").count(), 63);
    assert!(svg.contains("<ellipse "));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(&miquel(p, &["generate", "--kind", "bogus", "--rows", "4", "--cols", "4", "-o", "x.json"])), 2);
    assert_eq!(code(&miquel(p, &["evolve", "-o", "x.json"])), 2);
    assert_eq!(code(&miquel(p, &["verify", "-i", "missing.json", "-o", "r.json"])), 3);
    std::fs::write(p.join("bad.json"), "{\"version\": 1, \"window\": ").unwrap();
    assert_eq!(code(&miquel(p, &["verify", "-i", "bad.json", "-o", "r.json"])), 3);
    assert_eq!(code(&miquel(p, &["generate", "--kind", "generic", "--rows", "4", "--cols", "4", "-o", "s.json"])), 0);
    // too few levels for any interior octahedron
    assert_eq!(code(&miquel(p, &["verify", "-i", "s.json", "-o", "r.json"])), 1);
}

#[test]
fn number_formats_and_vars_export() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    evolved_map(p, &[]);
    assert_eq!(code(&miquel(p, &["evolve", "-i", "e.json", "--steps", "0", "--decimal", "-o", "d.json"])), 0);
    assert_eq!(code(&miquel(p, &["vars", "-i", "e.json", "--kind", "xb", "-o", "a.csv"])), 0);
    assert_eq!(code(&miquel(p, &["vars", "-i", "d.json", "--kind", "xb", "-o", "b.csv"])), 0);
    let a = std::fs::read_to_string(p.join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read_to_string(p.join("b.csv")).unwrap());
    assert!(a.starts_with("z1,z2,z3,re,im\n"));
    assert!(a.lines().count() > 1);
    assert_eq!(code(&miquel(p, &["vars", "-i", "e.json", "--kind", "gamma", "--layer", "0", "-o", "g.csv"])), 0);
    assert!(std::fs::read_to_string(p.join("g.csv")).unwrap().starts_with("k,i,j,dir,re,im\n"));
}

#[test]
fn tolerance_scale_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    evolved_map(p, &[]);
    let o = Command::new(env!("CARGO_BIN_EXE_miquel"))
        .args(["verify", "-i", "e.json", "--suite", "incidence", "-o", "r.json"])
        .current_dir(p)
        .env("MIQUEL_TOL_SCALE", "2.5")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let r = report(p, "r.json");
    assert_eq!(r["tol_scale"].as_f64(), Some(2.5));
}
