use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fracmax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracmax"))
        .args(args)
        .env_remove("FRACMAX_TOL")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn grid_space(dir: &Path) -> (String, String) {
    let spec = dir.join("grid.json");
    fs::write(&spec, r#"{"id":"g","kind":"grid","n":5}"#).unwrap();
    let space = dir.join("space.json");
    let out = fracmax(&["space", "build", "--spec", path(&spec), "--out", path(&space)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let u = dir.join("u.csv");
    fs::write(&u, "point,value\n0,0\n1,1\n2,0\n3,2\n4,1\n").unwrap();
    (path(&space).to_owned(), path(&u).to_owned())
}

#[test]
fn pointwise_transfer_suite_on_two_point_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("reports");
    let out = fracmax(&[
        "--deterministic",
        "verify",
        "--suite",
        "thm33",
        "--corpus",
        "two_point",
        "--out",
        path(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(out_dir.join("gradient_transfer.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["schema_version"], 1);
    for rep in v["reports"].as_array().unwrap() {
        assert!(rep["best_constant"].as_f64().unwrap().is_finite());
        assert_eq!(rep["pass"], true);
    }
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert!(summary.starts_with("inequality,space,function,best_constant,pass,witness\n"));
    assert_eq!(summary.lines().count(), 1 + 6);
    assert!(out_dir.join("run.json").exists());
}

#[test]
fn delta_outside_window_is_a_parameter_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracmax(&[
        "verify",
        "--suite",
        "thm43",
        "--corpus",
        "two_point",
        "--out",
        path(dir.path()),
        "--s",
        "0.3",
        "--alpha",
        "0.2",
        "--delta",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(
        fracmax(&["space", "inspect", "--in", path(&missing)]).status.code(),
        Some(3)
    );
    assert_eq!(
        fracmax(&["verify", "--suite", "fs", "--corpus", path(&missing), "--out", "x"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(fracmax(&["verify", "--suite", "everything"]).status.code(), Some(2));
    assert_eq!(
        fracmax(&["corpus", "make", "--builtin", "nope", "--out", path(dir.path())])
            .status
            .code(),
        Some(2)
    );

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{not json").unwrap();
    assert_eq!(
        fracmax(&["space", "inspect", "--in", path(&bad)]).status.code(),
        Some(4)
    );
    let asym = dir.path().join("asym.json");
    fs::write(&asym, r#"{"points":[0,1],"metric":"matrix","dist":[[0,1],[2,0]]}"#).unwrap();
    assert_eq!(
        fracmax(&["space", "inspect", "--in", path(&asym)]).status.code(),
        Some(4)
    );

    let (space, u) = grid_space(dir.path());
    let out = fracmax(&["cover", "build", "--in", &space, "--r=-1"]);
    assert_eq!(out.status.code(), Some(5));
    let n = dir.path().join("n.json");
    let out = fracmax(&[
        "norm",
        "--space",
        &space,
        "--u",
        &u,
        "--kind",
        "besov",
        "--s",
        "0.5",
        "--p",
        "2",
        "--out",
        path(&n),
    ]);
    assert_eq!(out.status.code(), Some(2), "missing --q");
    let out = Command::new(env!("CARGO_BIN_EXE_fracmax"))
        .args([
            "norm",
            "--space",
            &space,
            "--u",
            &u,
            "--kind",
            "hajlasz",
            "--s",
            "1",
            "--p",
            "2",
            "--out",
            path(&n),
        ])
        .env("FRACMAX_TOL", "not a number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn norm_report_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let (space_path, u_path) = grid_space(dir.path());
    let out_path = dir.path().join("norm.json");
    let out = fracmax(&[
        "norm",
        "--space",
        &space_path,
        "--u",
        &u_path,
        "--kind",
        "tl",
        "--s",
        "0.5",
        "--p",
        "2",
        "--q",
        "inf",
        "--out",
        path(&out_path),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["q"], "inf");
    assert_eq!(v["feasibility"]["ok"], true);
    assert!(v["minimizer"]["levels"].is_array());

    let space = fracmax::MetricMeasureSpace::load(&space_path).unwrap();
    let want = fracmax::hajlasz::hajlasz_norm(&space, &[0.0, 1.0, 0.0, 2.0, 1.0], 0.5, 2.0)
        .unwrap()
        .value;
    let got = v["value"].as_f64().unwrap();
    assert!((got - want).abs() <= 1e-6 * want);
}

#[test]
fn maxfn_and_cover_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (space, u) = grid_space(dir.path());
    let m = dir.path().join("m.csv");
    let out = fracmax(&[
        "maxfn",
        "--alpha",
        "0",
        "--op",
        "standard",
        "--scales",
        "distances",
        "--in",
        &space,
        "--u",
        &u,
        "--out",
        path(&m),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(&m).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("point,value,scale"));
    // M_0 u >= |u| pointwise; the singleton radius is included.
    let u_vals = [0.0, 1.0, 0.0, 2.0, 1.0];
    for (line, u) in lines.zip(u_vals) {
        let value: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(value >= u);
    }

    let phi = dir.path().join("phi.csv");
    let out = fracmax(&["cover", "build", "--in", &space, "--r", "1.5", "--dump-phi", path(&phi)]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["centers"], serde_json::json!(["0", "2", "4"]));
    let rows = fs::read_to_string(&phi).unwrap();
    assert!(rows.starts_with("center_id,point_id,phi\n"));

    let balls = dir.path().join("balls.csv");
    let out = fracmax(&[
        "space",
        "inspect",
        "--in",
        &space,
        "--constants",
        "--balls",
        path(&balls),
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["constants"]["c_d"], 3.0);
    assert!(fs::read_to_string(&balls)
        .unwrap()
        .starts_with("x,r,closed,size,measure\n"));
}

#[test]
fn corpus_make_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("corpus");
    let out = fracmax(&["corpus", "make", "--builtin", "small", "--out", path(&out_dir)]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let from_dir = fracmax::corpus::Corpus::read_dir(&out_dir).unwrap();
    assert_eq!(v["fingerprint"].as_str().unwrap(), from_dir.fingerprint());
    assert!(out_dir.join("manifest.json").exists());
    assert!(out_dir.join("path6/space.json").exists());
    assert!(out_dir.join("path6/gaussian.csv").exists());

    // A corpus spec file and a corpus directory are both accepted by verify.
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        serde_json::to_string(&fracmax::corpus::CorpusSpec::builtin("two_point").unwrap()).unwrap(),
    )
    .unwrap();
    for source in [path(&spec), path(&out_dir)] {
        let r = dir.path().join("r");
        let out = fracmax(&["verify", "--suite", "fs", "--corpus", source, "--out", path(&r)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
