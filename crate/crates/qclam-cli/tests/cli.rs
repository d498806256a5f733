use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn qclam(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qclam")).current_dir(dir).args(args).output().expect("spawn qclam")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}", path.display()))).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

#[test]
fn zero_coefficient_gives_identity() {
    let t = TempDir::new().unwrap();
    let o = qclam(t.path(), &["beltrami-solve", "zero", "--grid-n", "64", "--out", "z"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let d = json(t.path().join("z/diagnostics.json"));
    assert!(d["residual"].as_f64().unwrap() <= 1e-12);
    let scale = json(t.path().join("z/displacement.pgm.json"));
    assert_eq!(scale["max"].as_f64(), Some(0.0));
    let pgm = fs::read(t.path().join("z/displacement.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n64 64\n255\n"));
    assert_eq!(pgm.len(), 13 + 64 * 64);
}

#[test]
fn radial_stretch_records_oracle_error() {
    let t = TempDir::new().unwrap();
    let o = qclam(t.path(), &["beltrami-solve", "radial-stretch:K=2", "--grid-n", "512", "--out", "r"]);
    assert_eq!(code(&o), 0);
    let d = json(t.path().join("r/diagnostics.json"));
    assert!(d["relative_l2_error"].as_f64().unwrap() <= 1e-2);
}

#[test]
fn malformed_csv_reports_the_line() {
    let t = TempDir::new().unwrap();
    write(t.path(), "mu.csv", "0,0,0,0\n0,0,x\n");
    let o = qclam(t.path(), &["beltrami-solve", "mu.csv"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    assert!(!t.path().join("qclam-out").exists(), "nothing is written before validation");
}

#[test]
fn stalled_solver_exits_two() {
    let t = TempDir::new().unwrap();
    let o = qclam(t.path(), &["beltrami-solve", "radial-stretch:K=3", "--grid-n", "64", "--tol", "1e-300"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn flags_and_subcommands_are_validated() {
    let t = TempDir::new().unwrap();
    assert_eq!(code(&qclam(t.path(), &["beltrami-solve", "zero", "--p", "3"])), 1);
    assert_eq!(code(&qclam(t.path(), &["no-such-command"])), 1);
    assert_eq!(code(&qclam(t.path(), &["beltrami-solve", "zero", "--grid-n", "100"])), 1);
    assert_eq!(code(&qclam(t.path(), &["--help"])), 0);
}

#[test]
fn shear_motion_passes_with_schwarz_equality() {
    let t = TempDir::new().unwrap();
    write(t.path(), "m.json", r#"{"formula": "alpha + z*conj(alpha)", "tau": [0.3, [0, 0.1]], "epsilon_bound": 0.5, "global": true}"#);
    let o = qclam(t.path(), &["motion-check", "m.json", "--out", "m"]);
    assert_eq!(code(&o), 0);
    let r = json(t.path().join("m/motion_check.json"));
    assert_eq!(r["passed"], Value::Bool(true));
    assert!(r["schwarz"]["worst_margin"].as_f64().unwrap().abs() < 1e-6);
}

#[test]
fn duplicate_leaves_and_antiholomorphic_formulas_fail() {
    let t = TempDir::new().unwrap();
    write(t.path(), "dup.json", r#"{"formula": "alpha + z*conj(alpha)", "tau": [0.3, 0.3], "epsilon_bound": 0.5, "global": true}"#);
    let o = qclam(t.path(), &["motion-check", "dup.json", "--out", "d"]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(t.path().join("d/motion_check.json"))["disjointness"]["passed"], Value::Bool(false));

    write(t.path(), "cz.json", r#"{"formula": "alpha + 0.1*conj(z)", "tau": [0.3], "epsilon_bound": 0.5}"#);
    let o = qclam(t.path(), &["motion-check", "cz.json", "--out", "c"]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(t.path().join("c/motion_check.json"))["holomorphy"]["passed"], Value::Bool(false));

    write(t.path(), "bad.json", r#"{"formula": "alpha", "tau": [0.3], "epsilon_bound": 0.5, "colour": 1}"#);
    assert_eq!(code(&qclam(t.path(), &["motion-check", "bad.json"])), 1);
}

#[test]
fn builtin_families_pass_their_checks() {
    let t = TempDir::new().unwrap();
    for name in ["product", "shear", "affine", "exp-shear", "conformal"] {
        let o = qclam(t.path(), &["motion-check", name, "--out", name]);
        assert_eq!(code(&o), 0, "{name}");
    }
}

#[test]
fn motion_check_is_seeded() {
    let t = TempDir::new().unwrap();
    for (dir, seed) in [("a", "7"), ("b", "7"), ("c", "8")] {
        assert_eq!(code(&qclam(t.path(), &["motion-check", "affine", "--seed", seed, "--out", dir])), 0);
    }
    let read = |d: &str| fs::read(t.path().join(d).join("motion_check.json")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}

#[test]
fn holonomy_artifacts() {
    let t = TempDir::new().unwrap();
    let o = qclam(t.path(), &["motion-holonomy", "shear", "--target", "0.3,0.4", "--grid-n", "64", "--out", "h"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(t.path().join("h/holonomy.json"));
    assert!((r["mu_sup"].as_f64().unwrap() - 0.5).abs() < 1e-6);
    assert!(t.path().join("h/holonomy.csv").exists() && t.path().join("h/beltrami_abs.pgm.json").exists());
}

#[test]
fn decomposition_densities_and_violation() {
    let t = TempDir::new().unwrap();
    write(t.path(), "s.json", r#"{"tau": [0.1, [0, 0.2]], "weights": [1, 3]}"#);
    write(t.path(), "t.json", r#"{"tau": [0.1, [0, 0.2]], "weights": [2, 3]}"#);
    assert_eq!(code(&qclam(t.path(), &["current-decompose", "s.json", "t.json", "--out", "d"])), 0);
    let r = json(t.path().join("d/decomposition.json"));
    assert_eq!(r["density"], serde_json::json!([0.5, 1.0]));
    let o = qclam(t.path(), &["current-decompose", "t.json", "s.json", "--out", "v"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("leaf 0"));
}

#[test]
fn refinement_trace_diameters() {
    let t = TempDir::new().unwrap();
    write(t.path(), "c.json", r#"{"tau": [[0.05, 0], [0.052, 0.001], [0.3, 0.2]], "weights": [1, 2, 1]}"#);
    let o = qclam(t.path(), &["current-refine", "c.json", "--depth", "3", "--out", "r"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let steps = json(t.path().join("r/refinement.json"));
    let steps = steps.as_array().unwrap();
    assert_eq!(steps.len(), 3);
    for (k, s) in steps.iter().enumerate() {
        let bound = 10f64.powi(-(k as i32 + 1));
        assert!(s["ball_diameter"].as_f64().unwrap() <= bound);
        assert!(s["support_diameter"].as_f64().unwrap() <= bound);
    }
    let csv = fs::read_to_string(t.path().join("r/refinement.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn mass_and_residuals() {
    let t = TempDir::new().unwrap();
    write(t.path(), "g.json", r#"{"tau": [0.1], "weights": [2], "graphs": [{"formula": "0.5*z", "weight": 1}]}"#);
    assert_eq!(code(&qclam(t.path(), &["current-mass", "g.json", "--radius", "0.5", "--out", "m"])), 0);
    let m = json(t.path().join("m/mass.json"));
    assert!((m["mass"].as_f64().unwrap() - 2.0 * std::f64::consts::PI * 0.25).abs() < 1e-9);
    assert_eq!(code(&qclam(t.path(), &["current-residuals", "g.json", "--out", "r"])), 0);
    let r = json(t.path().join("r/residuals.json"));
    assert!(r["closedness"].as_f64().unwrap() <= 1e-6);
    assert!(r["directedness"].as_f64().unwrap() >= 0.5 - 1e-9);
}

#[test]
fn approximation_of_the_product_is_exact() {
    let t = TempDir::new().unwrap();
    write(t.path(), "p.json", r#"{"motion": "product", "grid_n": 64}"#);
    assert_eq!(code(&qclam(t.path(), &["approx-run", "p.json", "--out", "a"])), 0);
    let csv = fs::read_to_string(t.path().join("a/convergence.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[1].parse::<f64>().unwrap(), 0.0);
        assert_eq!(cols[2].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn shear_error_column_decreases_and_runs_reproduce() {
    let t = TempDir::new().unwrap();
    for dir in ["a", "b"] {
        assert_eq!(code(&qclam(t.path(), &["approx-run", "--p", "4", "--eps-list", "0.2,0.1,0.05", "--out", dir])), 0);
    }
    let csv = fs::read_to_string(t.path().join("a/convergence.csv")).unwrap();
    let errs: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(errs.len(), 3);
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    for f in ["convergence.csv", "report_0.json", "table_2.csv", "error_1.pgm", "error_1.pgm.json"] {
        assert_eq!(fs::read(t.path().join("a").join(f)).unwrap(), fs::read(t.path().join("b").join(f)).unwrap(), "{f}");
    }
    let r = json(t.path().join("a/report_2.json"));
    for key in ["epsilon", "kappa", "p", "sup_error", "w1p_error_per_leaf", "nu_sup", "flagged_points"] {
        assert!(r.get(key).is_some(), "{key}");
    }
}

#[test]
fn large_p_is_flagged_out_of_regime() {
    let t = TempDir::new().unwrap();
    let o = qclam(t.path(), &["approx-run", "--p", "7", "--grid-n", "64", "--eps-list", "0.4,0.2", "--out", "a"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("p_max"));
    assert_eq!(json(t.path().join("a/report_0.json"))["out_of_regime"], Value::Bool(true));
}

#[test]
fn approx_config_is_checked_before_running() {
    let t = TempDir::new().unwrap();
    write(t.path(), "c.json", r#"{"epsilons": [0.2], "extra": true}"#);
    assert_eq!(code(&qclam(t.path(), &["approx-run", "c.json"])), 1);
    assert_eq!(code(&qclam(t.path(), &["approx-run", "--eps-list", "0.2,-0.1"])), 1);
    assert_eq!(code(&qclam(t.path(), &["approx-run", "--delta", "1.5"])), 1);
    assert!(!t.path().join("qclam-out").exists());
}
