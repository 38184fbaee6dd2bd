use std::fs;
use std::path::Path;

use voldiff_cli::{cli_run_with, EXIT_DATA, EXIT_OK, EXIT_USAGE};

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["voldiff"];
    argv.extend_from_slice(args);
    let code = cli_run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: [&str; 4] = ["--scenes", "3", "--size", "32"];

#[test]
fn eval_identical_files_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = run(&["gen", "--out", s(dir.path()), "--scenes", "1", "--size", "24"]);
    assert_eq!(code, EXIT_OK);
    let gt = dir.path().join("scene_00_gt.pfm");
    let (code, out, err) = run(&["eval", s(&gt), s(&gt)]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.starts_with("epe=0.000000\n"), "{out}");
    let (code, out, _) = run(&["eval", "--json", s(&gt), s(&gt)]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("\"epe\": 0.0"));
}

#[test]
fn demo_is_reproducible() {
    let mut args = vec!["demo", "--steps", "5", "--seed", "7"];
    args.extend(SMALL);
    let (c1, a, _) = run(&args);
    let (c2, b, _) = run(&args);
    assert_eq!((c1, c2), (EXIT_OK, EXIT_OK));
    assert_eq!(a, b);
    assert!(a.contains("mean relative improvement"));
    let mut other = args.clone();
    other[4] = "8";
    assert_ne!(run(&other).1, a);
}

#[test]
fn run_reports_explicit_weights_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let mut args = vec!["run", "--steps", "5", "--eta", "0", "--weights", "0,0,0,0.2,0.3,0.5", "--out", s(&out_dir)];
    args.extend(SMALL);
    let (code, out, err) = run(&args);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.starts_with("steps=5 eta=0 seed=0 weights=0,0,0,0.2,0.3,0.5 renewal=on\n"), "{out}");
    for f in ["config.json", "comparison.txt", "metrics.json", "metrics.txt", "entropy_trace.tsv"] {
        assert!(out_dir.join(f).is_file(), "{f}");
    }
    assert!(out_dir.join("scene_02/disparity.png").is_file());
    // The written config reproduces the run.
    let again = dir.path().join("again");
    let cfg = out_dir.join("config.json");
    let (code, out2, _) = run(&["run", "--config", s(&cfg), "--out", s(&again)]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out2, out);
    assert_eq!(fs::read(out_dir.join("metrics.json")).unwrap(), fs::read(again.join("metrics.json")).unwrap());
}

#[test]
fn run_on_a_pair_with_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert_eq!(run(&["gen", "--out", s(&data), "--scenes", "2", "--size", "40", "--format", "png"]).0, EXIT_OK);
    let out_dir = dir.path().join("out");
    let (code, out, err) = run(&[
        "run",
        "--left",
        s(&data.join("scene_01_left.png")),
        "--right",
        s(&data.join("scene_01_right.png")),
        "--gt",
        s(&data.join("scene_01_gt.pfm")),
        "--max-disp",
        "32",
        "--snapshots",
        "--out",
        s(&out_dir),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("epe_diffusion="));
    assert_eq!(out.lines().filter(|l| l.starts_with(char::is_numeric)).count(), 5);
    for f in ["disparity.pfm", "disparity.png", "baseline.pfm", "step_5.pfm", "metrics.txt"] {
        assert!(out_dir.join(f).is_file(), "{f}");
    }
    let (code, out, _) = run(&["eval", s(&out_dir.join("disparity.pfm")), s(&data.join("scene_01_gt.pfm"))]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("pixels="));
}

#[test]
fn probe_entropy_table() {
    let mut args = vec!["probe-entropy", "--pixel", "5,6", "--pixel", "20,10", "--histogram", "--scene", "1"];
    args.extend(SMALL);
    let (code, out, err) = run(&args);
    assert_eq!(code, EXIT_OK, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "x\ty\tt1000\tt800\tt600\tt400\tt200\tdecreasing");
    assert!(lines[1].starts_with("5\t6\t"));
    assert_eq!(lines.iter().filter(|l| l.starts_with("hist")).count(), 10);
    let mut mean = vec!["probe-entropy", "--pixel", "0,0", "--suite-mean"];
    mean.extend(SMALL);
    assert_eq!(run(&mean).0, EXIT_OK);
    let mut outside = vec!["probe-entropy", "--pixel", "99,0"];
    outside.extend(SMALL);
    assert_eq!(run(&outside).0, EXIT_USAGE);
}

#[test]
fn gen_writes_suite() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run(&["gen", "--out", s(dir.path()), "--scenes", "3", "--size", "16", "--suite-max-disp", "8"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out, format!("wrote 3 scenes to {}\n", dir.path().display()));
    let n = fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(n, 3 * 3 + 1);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("suite.json")).unwrap()).unwrap();
    assert_eq!(json["scenes"].as_array().unwrap().len(), 3);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&[]).0, EXIT_USAGE);
    assert_eq!(run(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(run(&["demo", "--eta", "2"]).0, EXIT_USAGE);
    assert_eq!(run(&["demo", "--steps", "5", "--weights", "1,1"]).0, EXIT_USAGE);
    assert_eq!(run(&["demo", "--renewal", "maybe"]).0, EXIT_USAGE);
    assert_eq!(run(&["demo", "--groups", "5"]).0, EXIT_USAGE);
    assert_eq!(run(&["--help"]).0, EXIT_OK);
    let (code, _, err) = run(&["eval", "/nonexistent/a.pfm", "/nonexistent/b.pfm"]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.starts_with("error:"));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pfm");
    fs::write(&bad, b"PF\n1 1\n-1\n\0\0\0\0\0\0\0\0\0\0\0\0").unwrap();
    assert_eq!(run(&["eval", s(&bad), s(&bad)]).0, EXIT_DATA);
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"input": {"suite": {}}, "output_dir": "x", "sampler": {"eta": 5}}"#).unwrap();
    assert_eq!(run(&["run", "--config", s(&cfg)]).0, EXIT_USAGE);
}
