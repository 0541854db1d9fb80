use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn phdae(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phdae")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut a = args.to_vec();
    a.extend(["--format", "json"]);
    let out = phdae(&a);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout));
    });
    (out.status.code().unwrap(), v)
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Row-major matrix from a report payload.
fn mat(v: &Value) -> Vec<Vec<f64>> {
    v["data"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect())
        .collect()
}

fn rank(rows: &[Vec<f64>]) -> usize {
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())) else { break };
        if m[p][c].abs() < 1e-12 {
            continue;
        }
        m.swap(r, p);
        for i in 0..m.len() {
            if i != r {
                let f = m[i][c] / m[r][c];
                for j in 0..cols {
                    m[i][j] -= f * m[r][j];
                }
            }
        }
        r += 1;
    }
    r
}

const SINGULAR_P: &str = r#"{"kind":"extended","matrices":{
 "K":{"rows":2,"cols":2,"data":[[1,0],[0,1]]},
 "L":{"rows":2,"cols":2,"data":[[0,1],[-1,0]]},
 "P":{"rows":2,"cols":2,"data":[[1,0],[0,0]]},
 "S":{"rows":2,"cols":2,"data":[[1,0],[0,1]]}}}"#;

#[test]
fn msd_without_damping_has_index_two() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("msd-limit-d0.json");
    assert_eq!(phdae(&["model", "msd", "--variant", "m-zero", "--param", "d=0", "--out", s(&f)]).status.code(), Some(0));
    let (code, r) = json(&["index", s(&f)]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["index"], 2);
    assert_eq!(r["verdict"]["status"], "ok");
}

#[test]
fn inline_msd_limit_has_index_two() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "p.json",
        r#"{"kind":"pencil","matrices":{"E":{"rows":2,"cols":2,"data":[[1,0],[0,0]]},
            "A":{"rows":2,"cols":2,"data":[[0,1],[-1,0]]}}}"#,
    );
    let (code, r) = json(&["index", s(&f)]);
    assert_eq!((code, r["result"]["index"].as_u64()), (0, Some(2)));
}

#[test]
fn right_half_plane_pencil_is_not_lossless() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "rhp.json",
        r#"{"kind":"pencil","matrices":{"E":{"rows":1,"cols":1,"data":[[1]]},"A":{"rows":1,"cols":1,"data":[[1]]}}}"#,
    );
    let (code, r) = json(&["check", s(&f), "--variant", "lossless"]);
    assert_eq!(code, 1);
    let reasons: Vec<&str> = r["verdict"]["reasons"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(reasons.contains(&"eigenvalue off the imaginary axis"), "{reasons:?}");
}

#[test]
fn x_representation_with_singular_p() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "singular-p.json", SINGULAR_P);
    let (code, r) = json(&["convert", s(&f), "--to", "x"]);
    assert_eq!(code, 0);
    // row space of [Ex | -Ax] against the expected [[0,0],[0,1]] x' = [[0,1],[-1,0]] x
    let (ex, ax) = (mat(&r["result"]["ex"]), mat(&r["result"]["ax"]));
    let got: Vec<Vec<f64>> = ex.iter().zip(&ax).map(|(e, a)| e.iter().copied().chain(a.iter().map(|v| -v)).collect()).collect();
    let want = vec![vec![0.0, 0.0, 0.0, -1.0], vec![0.0, 1.0, 1.0, 0.0]];
    let both: Vec<Vec<f64>> = got.iter().chain(&want).cloned().collect();
    assert_eq!(rank(&got), 2);
    assert_eq!(rank(&both), 2);
}

#[test]
fn validate_reports_violations() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", SINGULAR_P);
    assert_eq!(phdae(&["validate", s(&good)]).status.code(), Some(0));
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"kind":"dirac","matrices":{"K":{"rows":1,"cols":1,"data":[[1]]},"L":{"rows":1,"cols":1,"data":[[1]]}}}"#,
    );
    let (code, r) = json(&["validate", s(&bad)]);
    assert_eq!(code, 1);
    assert!(!r["verdict"]["reasons"].as_array().unwrap().is_empty());
}

#[test]
fn usage_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(phdae(&["validate", "/nonexistent/system.json"]).status.code(), Some(3));
    let junk = write(dir.path(), "junk.json", "{ not json");
    assert_eq!(phdae(&["index", s(&junk)]).status.code(), Some(3));
    let missing = write(dir.path(), "m.json", r#"{"kind":"dh","matrices":{}}"#);
    assert_eq!(phdae(&["index", s(&missing)]).status.code(), Some(3));
    assert_eq!(phdae(&["condense"]).status.code(), Some(3));
    assert_eq!(phdae(&["index", s(&missing), "--tol", "-1"]).status.code(), Some(3));
    assert_eq!(phdae(&["--help"]).status.code(), Some(0));
}

#[test]
fn json_is_byte_identical_across_runs() {
    let a = phdae(&["selftest", "--seed", "11", "--trials", "5", "--format", "json"]);
    let b = phdae(&["selftest", "--seed", "11", "--trials", "5", "--format", "json"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    for key in ["tool_version", "tolerances", "residuals", "verdict"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    // floats carry 17 significant digits
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("\"structure_tol\": 1.0000000000000000e-10"));
}

#[test]
fn matrix_market_manifest_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let inline = dir.path().join("tm.json");
    let mm = dir.path().join("tm-mm.json");
    assert_eq!(phdae(&["model", "two-mass", "--out", s(&inline)]).status.code(), Some(0));
    assert_eq!(phdae(&["model", "two-mass", "--out", s(&mm), "--mm"]).status.code(), Some(0));
    assert!(dir.path().join("tm-mm.P.mtx").exists());
    let (c1, a) = json(&["index", s(&inline)]);
    let (c2, b) = json(&["index", s(&mm)]);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a["result"], b["result"]);
    assert_eq!(a["result"]["index"], 2);
}

#[test]
fn tol_flag_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "singular-p.json", SINGULAR_P);
    let (_, r) = json(&["index", s(&f), "--tol", "1e-8"]);
    assert_eq!(r["tolerances"]["relative_rank_tol"].as_f64(), Some(1e-8));
}

#[test]
fn hamiltonian_frames() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "singular-p.json", SINGULAR_P);
    let v = write(dir.path(), "v.json", "[1, 2]");
    let (code, r) = json(&["hamiltonian", s(&f), "--at", s(&v), "--frame", "z"]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["value"].as_f64(), Some(0.5));
    // P is singular, so the x frame is undefined
    let (code, _) = json(&["hamiltonian", s(&f), "--at", s(&v), "--frame", "x"]);
    assert_eq!(code, 1);
}

#[test]
fn condense_forms_run() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "singular-p.json", SINGULAR_P);
    for form in ["lagrange", "dirac", "extended-lagrange", "extended-dirac"] {
        let (code, r) = json(&["condense", s(&f), "--form", form]);
        assert_eq!(code, 0, "{form}: {}", r["verdict"]);
    }
    let msd = dir.path().join("msd.json");
    phdae(&["model", "msd", "--out", s(&msd)]);
    for form in ["index2-staircase", "dh-canonical"] {
        let (code, r) = json(&["condense", s(&msd), "--form", form]);
        assert_eq!(code, 0, "{form}: {}", r["verdict"]);
    }
    let (code, _) = json(&["convert", s(&msd), "--to", "monotone"]);
    assert_eq!(code, 0);
    let (code, _) = json(&["condense", s(&msd), "--form", "lagrange"]);
    assert_eq!(code, 3);
}
