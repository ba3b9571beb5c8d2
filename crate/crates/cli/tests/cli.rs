use std::path::PathBuf;
use std::process::Command;

use sphere_oep::NonlinearityDesc;
use sphere_oep_cli::golden::GoldenStore;
use sphere_oep_cli::sweep::run_sweep;
use sphere_oep_cli::verify_all::{verify_all, VerifyConfig};

const TWO_X: NonlinearityDesc = NonlinearityDesc::Affine { a: 2.0, b: 0.0 };

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sphere-oep"));
    c.env_remove("SPHERE_OEP_GOLDEN");
    c
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sphere-oep-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn small_config(fs: Vec<NonlinearityDesc>) -> VerifyConfig {
    VerifyConfig { nonlinearities: fs, heights: vec![0.0, 0.5], estimate_heights: vec![0.0], perturbed: None, ..VerifyConfig::default() }
}

#[test]
fn profile_sweep_has_one_row_per_height() {
    let grid = vec![("R".to_string(), (0..10).map(|k| k as f64 / 10.0).collect()), ("M".to_string(), vec![1.0])];
    let table = run_sweep("profile", &TWO_X, &grid, 1e-10).unwrap();
    assert_eq!(table.rows.len(), 10);
    assert_eq!(table.failures(), 0);
    let mut buf = Vec::new();
    table.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), "R,M,r1,r2,g1,g2,error");
    assert_eq!(text.lines().count(), 11);
    let g2: Vec<f64> = table.rows.iter().map(|r| r.values[3]).collect();
    assert!(g2.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn tau_sweep_is_scale_invariant_for_linear_f() {
    let grid = vec![("M".to_string(), vec![0.5, 1.0, 2.0])];
    let table = run_sweep("tau", &TWO_X, &grid, 1e-10).unwrap();
    let t0: Vec<f64> = table.rows.iter().map(|r| r.values[0]).collect();
    assert!(t0.iter().all(|t| (t - t0[0]).abs() < 1e-6), "{t0:?}");
    assert!((t0[0] - 4.7167).abs() < 1e-3);
}

#[test]
fn sweep_errors() {
    let grid = vec![("M".to_string(), vec![1.0])];
    assert!(run_sweep("solve", &TWO_X, &grid, 1e-10).is_err());
    assert!(run_sweep("disk", &TWO_X, &[("R".to_string(), vec![0.0])], 1e-10).is_err());
    assert!(run_sweep("disk", &TWO_X, &[], 1e-10).is_err());
    // a failing point is recorded in its row
    let bad = NonlinearityDesc::Affine { a: 2.0, b: -5.0 };
    let table = run_sweep("disk", &bad, &grid, 1e-10).unwrap();
    assert_eq!(table.failures(), 1);
}

#[test]
fn suite_outcomes() {
    let store = GoldenStore::builtin();
    let x = NonlinearityDesc::Affine { a: 1.0, b: 0.0 };
    let s = verify_all(&small_config(vec![x]), &store, false).unwrap();
    assert!(!s.pass && s.exit_code() == 1);
    let first = &s.checks[0];
    assert_eq!(first.name, "validate_conditions");
    assert!(!first.pass && first.detail.contains("cond_ii"));

    let empty = verify_all(&small_config(vec![]), &store, false).unwrap();
    assert!(empty.pass && empty.checks.is_empty() && !empty.warnings.is_empty());
    assert_eq!(empty.exit_code(), 0);

    assert!(verify_all(&small_config(vec![TWO_X]), &GoldenStore::default(), true).is_err());
    assert_ne!(small_config(vec![TWO_X]).hash(), small_config(vec![x]).hash());
}

#[test]
fn default_suite_fails_only_on_the_lower_g_pattern() {
    let s = verify_all(&VerifyConfig::default(), &GoldenStore::builtin(), true).unwrap();
    assert_eq!(s.passed + s.failed, s.checks.len());
    assert!(s.checks.iter().any(|c| c.name.starts_with("golden:") && c.pass));
    for c in s.checks.iter().filter(|c| !c.pass) {
        assert_eq!(c.name, "sign:G-lower", "{c:?}");
        assert!(!c.subject.ends_with("R=0"));
    }
    assert_eq!(s.exit_code(), i32::from(s.failed > 0));
}

#[test]
fn profile_command_writes_table_and_sidecar() {
    let out = scratch("profile.csv");
    let st = bin().args(["profile", "--R", "0", "--M", "1", "--f", "affine:2,0", "--out"]).arg(&out).status().unwrap();
    assert!(st.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "r,U,dU,Z,dZ,G");
    let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert!((side["r2"].as_f64().unwrap() - 0.83356).abs() < 1e-4);
    assert_eq!(side["f"]["kind"], "affine");
}

#[test]
fn invert_tau_reports_the_branch() {
    let o = bin().args(["invert-tau", "--value", "0.7", "--format", "json"]).output().unwrap();
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["r_bar"], 1.0);
    assert_eq!(v["branch"], "disk");
    let o = bin().args(["invert-tau", "--value", "6"]).output().unwrap();
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("R_bar,branch\n") && text.trim_end().ends_with(",upper"), "{text}");
}

#[test]
fn solve_then_verify() {
    let sol = scratch("solution.txt");
    let st = bin()
        .args(["solve", "--model", "0,1", "--perturb", "0.01,3", "--n_s", "32", "--n_theta", "32", "--tol", "1e-9", "--out"])
        .arg(&sol)
        .output()
        .unwrap();
    assert!(st.status.success());
    let text = std::fs::read_to_string(&sol).unwrap();
    assert!(text.lines().nth(1).unwrap() == "s,theta,u");
    for estimate in ["gradient", "curvature", "length"] {
        let o = bin().args(["verify", estimate, "--solution"]).arg(&sol).output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{estimate}: {}", String::from_utf8_lossy(&o.stderr));
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["pass"], true);
        assert_eq!(v["reports"].as_array().unwrap().len(), 2);
    }
    let dir = scratch("levels");
    let st = bin().args(["levels", "--values", "0.5", "--solution"]).arg(&sol).arg("--out").arg(&dir).output().unwrap();
    assert!(st.status.success());
    let index: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("index.json")).unwrap()).unwrap();
    assert_eq!(index.as_array().unwrap().len(), 2);
    let o = bin().args(["radial-graph", "--solution"]).arg(&sol).output().unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("x,y,z,nx,ny,nz,contact,kind"));
}

#[test]
fn verify_all_exit_status_and_golden_override() {
    let cfg = scratch("bad.json");
    std::fs::write(&cfg, r#"{"nonlinearities":[{"kind":"affine","a":1.0,"b":0.0}],"perturbed":null}"#).unwrap();
    let o = bin().args(["verify-all", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["tool_version"].is_string() && v["config_hash"].as_str().unwrap().len() == 64);

    // a store whose only value is wrong
    let golden = scratch("golden.json");
    std::fs::write(
        &golden,
        r#"[{"f":{"kind":"affine","a":2.0,"b":0.0},"M":1.0,"R":null,"quantity":"h","value":1.5,"tolerance":1e-8,"oracle":"deliberately wrong","timestamp":"t"}]"#,
    )
    .unwrap();
    let ok = scratch("ok.json");
    std::fs::write(&ok, r#"{"nonlinearities":[{"kind":"affine","a":2.0,"b":0.0}],"heights":[0.0],"estimate_heights":[],"perturbed":null}"#).unwrap();
    let o = bin().args(["verify-all", "--config"]).arg(&ok).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = bin().env("SPHERE_OEP_GOLDEN", &golden).args(["verify-all", "--config"]).arg(&ok).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let failed: Vec<&str> = v["checks"].as_array().unwrap().iter().filter(|c| c["pass"] == false).map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(failed, vec!["golden:h"]);
}

#[test]
fn bad_arguments_exit_with_two() {
    let o = bin().args(["profile", "--R", "0", "--M", "-1"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(["solve", "--n_s", "32"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
