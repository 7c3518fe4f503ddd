use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_uncertainty"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn sweep_default_writes_65_rows_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let plot = dir.path().join("plots").join("fig.plt");
    fs::create_dir_all(plot.parent().unwrap()).unwrap();
    let o = run(&["sweep", "--out", csv.to_str().unwrap(), "--plot", plot.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&csv).unwrap();
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 65);
    for r in &rows {
        assert!(r[5].parse::<f64>().unwrap() >= 2.0);
    }
    let script = fs::read_to_string(&plot).unwrap();
    assert!(script.contains("data = \"../sweep.csv\""), "{script}");
}

#[test]
fn sweep_step_limits() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("two.csv");
    let o = run(&["sweep", "--steps", "2", "--out", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&fs::read_to_string(&csv).unwrap());
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0].parse::<f64>().unwrap(), 0.0);
    assert_eq!(rows[1][0].parse::<f64>().unwrap(), std::f64::consts::FRAC_PI_2);
    let o = run(&["sweep", "--steps", "1", "--out", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("at least 2 steps"));
}

#[test]
fn sweep_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    run(&["sweep", "--out", a.to_str().unwrap()]);
    let o = bin()
        .env("RAYON_NUM_THREADS", "1")
        .args(["sweep", "--out", b.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

fn report_map(text: &str) -> Vec<(String, bool)> {
    csv_rows(text).into_iter().map(|r| (r[0].clone(), r[5] == "true")).collect()
}

#[test]
fn check_spin_phi_zero() {
    let o = run(&["check", "--model", data("spin_phi0.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("relation_id,lhs,rhs,slack,normalized_slack,satisfied\n"));
    let rows = report_map(&text);
    assert!(rows.contains(&("HEDR13".into(), false)));
    assert!(rows.contains(&("UVH1".into(), true)));
    assert!(rows.contains(&("MAK9".into(), false)));
}

#[test]
fn check_identity_coupling_has_no_disturbance() {
    let o = run(&["check", "--model", data("identity_u.json").to_str().unwrap(), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["quantities"]["eta"].as_f64(), Some(0.0));
    let r21 = doc["reports"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["relation"] == "R21")
        .unwrap();
    assert_eq!(r21["lhs"].as_f64(), Some(0.0));
}

#[test]
fn check_joint_and_projective_models() {
    let o = run(&["check", "--model", data("sequential_joint.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let rows = report_map(&stdout(&o));
    assert_eq!(
        rows,
        vec![("R8".into(), true), ("AK34".into(), false), ("UAK35".into(), true)]
    );
    let o = run(&[
        "check",
        "--model",
        data("spin_projective_pi4.json").to_str().unwrap(),
        "--relations",
        "UVH1,oz16",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(report_map(&stdout(&o)), vec![("UVH1".into(), true), ("OZ16".into(), true)]);
    let o = run(&[
        "check",
        "--model",
        data("sequential_joint.json").to_str().unwrap(),
        "--relations",
        "OZ16",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn check_state_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("minus_z.json");
    fs::write(&state, "[[0.0, 0.0], [1.0, 0.0]]").unwrap();
    let o = run(&[
        "check",
        "--model",
        data("spin_phi0.json").to_str().unwrap(),
        "--state",
        state.to_str().unwrap(),
        "--relations",
        "HEDR13",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(report_map(&stdout(&o)), vec![("HEDR13".into(), false)]);
    let o = run(&["check", "--model", data("spin_phi0.json").to_str().unwrap(), "--state", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("states"));
}

#[test]
fn truncated_model_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(data("spin_phi0.json")).unwrap();
    let cut = text.find("\"M\"").unwrap() + 12;
    let path = dir.path().join("truncated.json");
    fs::write(&path, &text[..cut]).unwrap();
    let o = run(&["check", "--model", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("field `M`"), "{err}");
    assert!(err.contains("line"), "{err}");

    let mut value: Value = serde_json::from_str(&text).unwrap();
    value.as_object_mut().unwrap().remove("xi");
    fs::write(&path, value.to_string()).unwrap();
    let o = run(&["check", "--model", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("field `xi`"));
}

#[test]
fn search_is_deterministic_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &Path| {
        vec![
            "search".to_string(),
            "--target".into(),
            "MAK9".into(),
            "--trials".into(),
            "300".into(),
            "--seed".into(),
            "42".into(),
            "--inject-spin".into(),
            "--refine".into(),
            "5".into(),
            "--out".into(),
            out.to_str().unwrap().into(),
        ]
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let oa = bin().env("RAYON_NUM_THREADS", "1").args(args(&a)).output().unwrap();
    let ob = bin().env("RAYON_NUM_THREADS", "4").args(args(&b)).output().unwrap();
    assert_eq!(oa.status.code(), Some(0));
    assert_eq!(oa.stdout, ob.stdout);
    let mut names: Vec<String> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(names.contains(&"summary.csv".to_string()));
    for name in &names {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let summary = fs::read_to_string(a.join("summary.csv")).unwrap();
    let first = summary.lines().nth(1).unwrap();
    assert!(first.starts_with("witness,0,"), "{first}");
}

#[test]
fn search_universal_target_finds_nothing() {
    let o = run(&["search", "--target", "UVH1", "--trials", "500"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("target=UVH1 trials=500 seed=42 witnesses=0"));
}

#[test]
fn search_rejects_bad_dims() {
    let o = run(&["search", "--target", "MAK9", "--dim-system", "1:3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn box_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("box.csv");
    let o = run(&[
        "box",
        "--profile",
        "plane:0",
        "--profile",
        "plane:3",
        "--profile",
        "gaussian:0.05",
        "--L",
        "1",
        "--grid",
        "1024",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("state_id,devX,devP,lhs,rhs,satisfied\n"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 3);
    for plane in &rows[..2] {
        assert!(plane[3].parse::<f64>().unwrap().abs() < 1e-10);
        assert!(plane[4].parse::<f64>().unwrap().abs() < 1e-12);
        assert_eq!(plane[5], "true");
    }
    assert_eq!(rows[2][0], "gaussian:0.05");
    assert_eq!(rows[2][5], "true");
    assert!((rows[2][3].parse::<f64>().unwrap() - 0.5).abs() < 1e-8);
}

#[test]
fn box_sample_file() {
    let path = data("band_limited_64.txt");
    let profile = format!("file:{}", path.display());
    let o = run(&["box", "--profile", &profile]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(csv_rows(&stdout(&o))[0][5], "true");
}

#[test]
fn box_usage_errors() {
    assert_eq!(run(&["box", "--profile", "plane:0", "--grid", "1000"]).status.code(), Some(1));
    assert_eq!(run(&["box", "--profile", "tophat:1"]).status.code(), Some(1));
    assert_eq!(run(&["box", "--profile", "gaussian:0.4"]).status.code(), Some(1));
}

#[test]
fn report_overlays_synthetic_points() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    run(&["sweep", "--out", csv.to_str().unwrap()]);
    let o = run(&[
        "report",
        "--in",
        csv.to_str().unwrap(),
        "--data",
        data("analytic_points.csv").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let summary = text.lines().last().unwrap();
    assert!(summary.starts_with("# points=54 "), "{summary}");
    let max: f64 = summary
        .split("max_abs_residual=")
        .nth(1)
        .unwrap()
        .split(' ')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(max <= 1e-12);
}

#[test]
fn report_empty_and_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    run(&["sweep", "--out", csv.to_str().unwrap()]);
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let o = run(&["report", "--in", csv.to_str().unwrap(), "--data", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("# points=0 max_abs_residual=none"));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "angle,what,value\n0,eps,0\n").unwrap();
    let o = run(&["report", "--in", csv.to_str().unwrap(), "--data", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad header"));

    let o = run(&["report", "--in", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_and_help() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["check"]).status.code(), Some(1));
}
