use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvmom"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Runs with `--json` into `dir` and returns the exit code and parsed report.
fn run_json(dir: &Path, args: &[&str]) -> (i32, Value) {
    let path = dir.join("report.json");
    let mut all: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap();
    all.extend(["--json", p]);
    let out = run(&all);
    let text = fs::read_to_string(&path).unwrap_or_else(|_| panic!("no report: {}", stderr(&out)));
    (code(&out), serde_json::from_str(&text).unwrap())
}

fn check<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check {name}"))
}

fn residual(report: &Value, name: &str) -> f64 {
    check(report, name)["max_residual"].as_f64().unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn torus_check_passes() {
    let dir = TempDir::new().unwrap();
    let (c, r) = run_json(
        dir.path(),
        &["check", "--surface", "torus", "--a", "2", "--b", "1"],
    );
    assert_eq!(c, 0);
    assert_eq!(r["passed"], true);
    assert_eq!(r["command"], "check");
    assert_eq!(r["config"]["surface"], "torus");
    assert_eq!(r["checks"].as_array().unwrap().len(), 7);
}

#[test]
fn plane_check_residuals_vanish() {
    let dir = TempDir::new().unwrap();
    let (c, r) = run_json(dir.path(), &["check", "--surface", "plane", "--n", "64"]);
    assert_eq!(c, 0);
    for ch in r["checks"].as_array().unwrap() {
        assert!(ch["max_residual"].as_f64().unwrap() < 1e-12, "{ch}");
    }
}

#[test]
fn corrupted_normal_exits_one() {
    let dir = TempDir::new().unwrap();
    let (c, r) = run_json(dir.path(), &["check", "--debug-corrupt-normal"]);
    assert_eq!(c, 1);
    assert_eq!(r["passed"], false);
    assert_eq!(check(&r, "geometry.weingarten")["passed"], false);
    assert_eq!(check(&r, "geometry.duality")["passed"], true);
}

#[test]
fn tolerance_override_decides_outcome() {
    let dir = TempDir::new().unwrap();
    let (c, _) = run_json(dir.path(), &["check", "--n", "64"]);
    assert_eq!(c, 1);
    let (c, r) = run_json(
        dir.path(),
        &[
            "check",
            "--n",
            "64",
            "--tol-mean_curvature_vector",
            "1e-4",
            "--tol-geometry.contracted_christoffel=1e-4",
        ],
    );
    assert_eq!(c, 0);
    assert_eq!(
        check(&r, "geometry.mean_curvature_vector")["tolerance"],
        1e-4
    );
}

#[test]
fn usage_errors_exit_two() {
    let out = run(&["geom", "--a", "x"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--a"));

    let out = run(&["check", "--tol-bogus", "1e-3"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("bogus"));

    let out = run(&["check", "--tol-weingarten", "-1"]);
    assert_eq!(code(&out), 2);

    let out = run(&["geom", "--surface", "torus", "--a", "1", "--b", "2"]);
    assert_eq!(code(&out), 2);

    let out = run(&["geom", "--surface", "klein"]);
    assert_eq!(code(&out), 2);

    let out = run(&["factors", "--surface", "plane"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn config_file_merges_under_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(
        &cfg,
        "# torus run\nsurface = torus\na = 3\nb = 1\nn = 48\nseed = 7\n",
    )
    .unwrap();
    let (c, r) = run_json(
        dir.path(),
        &["geom", "--config", cfg.to_str().unwrap(), "--n", "32"],
    );
    assert_eq!(c, 0);
    assert_eq!(r["config"]["a"], "3");
    assert_eq!(r["config"]["n-xi"], "32");
    assert_eq!(r["config"]["seed"], "7");

    fs::write(&cfg, "surface = torus\nradius = 2\n").unwrap();
    let out = run(&["geom", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("radius"));
}

#[test]
fn geom_exports_closed_form_curvature() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = run(&[
        "geom",
        "--surface",
        "torus",
        "--a",
        "2",
        "--b",
        "1",
        "--n",
        "64",
        "--csv-dir",
        d,
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let (header, rows) = read_csv(&dir.path().join("H.csv"));
    assert_eq!(header, ["theta", "phi", "value"]);
    assert_eq!(rows.len(), 64 * 64);
    for row in &rows {
        let th: f64 = row[0].parse().unwrap();
        let h: f64 = row[2].parse().unwrap();
        let exact = -(2.0 + 2.0 * th.sin()) / (2.0 * (2.0 + th.sin()));
        assert!((h - exact).abs() < 1e-12, "{row:?}");
    }
    for name in [
        "K", "sqrt_g", "n_x", "n_y", "n_z", "g_00", "g_01", "g_11", "checks",
    ] {
        assert!(dir.path().join(format!("{name}.csv")).exists(), "{name}");
    }
}

#[test]
fn geom_plane_has_zero_curvature() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = run(&["geom", "--surface", "plane", "--n", "16", "--csv-dir", d]);
    assert_eq!(code(&out), 0);
    let (_, rows) = read_csv(&dir.path().join("H.csv"));
    assert!(rows.iter().all(|r| r[2].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn json_is_reproducible() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = [
        "ordering",
        "--surface",
        "sphere",
        "--n",
        "48",
        "--seed",
        "3",
    ];
    run_json(a.path(), &args);
    run_json(b.path(), &args);
    let ja = fs::read(a.path().join("report.json")).unwrap();
    let jb = fs::read(b.path().join("report.json")).unwrap();
    assert_eq!(ja, jb);
    assert!(ja.ends_with(b"}\n"));
}

#[test]
fn ordering_on_torus_and_catenoid() {
    let dir = TempDir::new().unwrap();
    let (c, r) = run_json(dir.path(), &["ordering", "--surface", "catenoid"]);
    assert_eq!(c, 0);
    assert!(residual(&r, "ordering.T_vs_laplacian") < 1e-4);

    let d = dir.path().to_str().unwrap();
    let (c, r) = run_json(
        dir.path(),
        &["ordering", "--factors", "constant", "--csv-dir", d],
    );
    assert_eq!(c, 0);
    assert!(residual(&r, "ordering.excess_h2") < 1e-4);
    assert!(residual(&r, "ordering.T_vs_naive") < 1e-12);
    let (header, _) = read_csv(&dir.path().join("excess.csv"));
    assert_eq!(
        header,
        [
            "theta",
            "phi",
            "measured_re",
            "measured_im",
            "expected_re",
            "expected_im"
        ]
    );
}

#[test]
fn factors_export_curves() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    let (c, r) = run_json(dir.path(), &["factors", "--csv-dir", d]);
    assert_eq!(c, 0);
    assert!(residual(&r, "factors.closed_ratio_z") < 1e-6);
    let (header, rows) = read_csv(&dir.path().join("f_z.csv"));
    assert_eq!(header, ["theta", "f_z"]);
    assert_eq!(rows.len(), 128);

    let (c, r) = run_json(dir.path(), &["factors", "--surface", "cylinder"]);
    assert_eq!(c, 0);
    assert_eq!(check(&r, "factors.T_identity")["passed"], true);
}

#[test]
fn torus_hermiticity_passes() {
    let dir = TempDir::new().unwrap();
    let (c, r) = run_json(dir.path(), &["hermiticity", "--pairs", "3"]);
    assert_eq!(c, 0);
    assert_eq!(r["config"]["pairs"], "3");
    assert!(residual(&r, "hermiticity.bare_p_x") > 1e-2);
}
