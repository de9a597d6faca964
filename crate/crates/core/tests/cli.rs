use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mghmi::field::{load_field, save_field, FieldFormat, MultiChannelField};
use mghmi::invgen::load_invariant_set;

fn mghmi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mghmi")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn gen_set(dir: &Path, name: &str, extra: &[&str]) -> std::path::PathBuf {
    let out = dir.join(name);
    let mut args = vec!["gen", "--out", p(&out)];
    args.extend_from_slice(extra);
    let o = mghmi(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    out
}

#[test]
fn ortho_check_succeeds() {
    let o = mghmi(&["ortho-check"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("max abs error"));
}

#[test]
fn gen_reports_seven_tr_invariants() {
    let o = mghmi(&["--json", "gen", "--model", "TR", "--degree", "2", "--order", "3"]);
    assert_eq!(code(&o), 0);
    let line = stdout(&o).lines().last().unwrap().to_string();
    let v: serde_json::Value = serde_json::from_str(&line).unwrap();
    assert_eq!(v["independent"], 7);
}

#[test]
fn gen_with_one_point_is_empty_with_a_warning() {
    let o = mghmi(&["gen", "--model", "RA", "--degree", "1", "--order", "3"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("0 independent"));
    assert!(stderr(&o).contains("warning"));
}

#[test]
fn gen_rejects_out_of_range_parameters() {
    assert_eq!(code(&mghmi(&["gen", "--degree", "9"])), 2);
    assert_eq!(code(&mghmi(&["gen", "--operator", "psi12"])), 2);
    assert_eq!(code(&mghmi(&["gen", "--operator", "psi13", "--primitive", "Lambda12"])), 2);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# vector fields\nmodel = RA\ndegree = 2\norder = 3\n").unwrap();
    let from_file = mghmi(&["gen", "--config", p(&cfg)]);
    assert!(stdout(&from_file).contains("6 independent"), "{}", stdout(&from_file));
    let overridden = mghmi(&["gen", "--config", p(&cfg), "--model", "TR"]);
    assert!(stdout(&overridden).contains("7 independent"), "{}", stdout(&overridden));
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "degre = 2\n").unwrap();
    let o = mghmi(&["gen", "--config", p(&cfg)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("degre"));
}

#[test]
fn synthesized_street_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("street.mcf");
    let o = mghmi(&["synth", "--kind", "vortex-street", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let f = load_field(&out, FieldFormat::Raw).unwrap();
    assert_eq!((f.coord_dim(), f.channel_dim()), (2, 2));
    assert_eq!(f.extent(), &[80, 320]);
}

#[test]
fn rgb_features_have_twelve_columns() {
    let dir = tempfile::tempdir().unwrap();
    let set = gen_set(dir.path(), "rgb.set", &["--coord-dim", "2", "--channel-dim", "3", "--model", "RA", "--degree", "3"]);
    assert_eq!(load_invariant_set(&set).unwrap().len(), 12);
    let tex = dir.path().join("tex.mcf");
    assert_eq!(code(&mghmi(&["synth", "--kind", "texture", "--side", "65", "--out", p(&tex)])), 0);
    let csv = dir.path().join("f.csv");
    let o = mghmi(&["features", "--field", p(&tex), "--set", p(&set), "--sigma", "13", "--out", p(&csv)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(&csv).unwrap();
    let row = text.lines().next().unwrap();
    assert_eq!(row.split(',').count(), 12);
}

#[test]
fn features_error_codes() {
    let dir = tempfile::tempdir().unwrap();
    let set = gen_set(dir.path(), "ra.set", &["--model", "RA"]);
    let csv = dir.path().join("f.csv");
    let missing = dir.path().join("nope.mcf");
    let o = mghmi(&["features", "--field", p(&missing), "--set", p(&set), "--sigma", "5", "--out", p(&csv)]);
    assert_eq!(code(&o), 3);

    let rgb = dir.path().join("tex.mcf");
    assert_eq!(code(&mghmi(&["synth", "--kind", "texture", "--side", "33", "--out", p(&rgb)])), 0);
    let o = mghmi(&["features", "--field", p(&rgb), "--set", p(&set), "--sigma", "5", "--out", p(&csv)]);
    assert_eq!(code(&o), 2);

    let flat = dir.path().join("flat.mcf");
    let constant = MultiChannelField::new(vec![21, 21], 2, vec![0.5; 21 * 21 * 2]).unwrap();
    save_field(&constant, &flat, FieldFormat::Raw).unwrap();
    let o = mghmi(&["features", "--field", p(&flat), "--set", p(&set), "--sigma", "5", "--out", p(&csv)]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn detect_rejects_oversized_k() {
    let dir = tempfile::tempdir().unwrap();
    let set = gen_set(dir.path(), "ra.set", &["--model", "RA"]);
    let frame = dir.path().join("street.mcf");
    let synth = ["synth", "--kind", "vortex-street", "--rows", "45", "--cols", "60", "--count", "2", "--out", p(&frame)];
    assert_eq!(code(&mghmi(&synth)), 0);
    let det = |k: &str| {
        mghmi(&["detect", "--frame", p(&frame), "--set", p(&set), "--window", "21", "--sigma", "5", "--stride", "4", "--k", k])
    };
    assert_eq!(code(&det("10")), 0);
    assert_eq!(code(&det("100000")), 2);
}

#[test]
fn classify_clean_suite_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite");
    let synth = ["synth", "--kind", "rgb-suite", "--side", "65", "--textures", "3", "--versions", "3", "--out", p(&suite)];
    assert_eq!(code(&mghmi(&synth)), 0);
    let set = gen_set(dir.path(), "rgb.set", &["--coord-dim", "2", "--channel-dim", "3", "--model", "RA", "--degree", "3"]);
    let o = mghmi(&[
        "classify",
        "--train",
        p(&suite.join("train")),
        "--test",
        p(&suite.join("test")),
        "--set",
        p(&set),
        "--sigma",
        "13",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("accuracy 100.00"), "{}", stdout(&o));
}

#[test]
fn mre_from_feature_tables() {
    let dir = tempfile::tempdir().unwrap();
    let (r, t) = (dir.path().join("ref.csv"), dir.path().join("tr.csv"));
    fs::write(&r, "a,1.0,2.0\nb,3.0,4.0\n").unwrap();
    fs::write(&t, "a__v0,1.0,2.0\nb__v0,3.3,4.0\n").unwrap();
    let o = mghmi(&["mre", "--reference", p(&r), "--transformed", p(&t)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("invariant 1: MRE 5.0000%"), "{out}");
    assert!(out.contains("invariant 2: MRE 0.0000%"), "{out}");
}
