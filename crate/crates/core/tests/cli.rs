//! End-to-end runs of the command line through `linfty::cli::run`, with every
//! summary and manifest validated against the published schemas.

use std::fs;
use std::path::{Path, PathBuf};

use linfty::cli::{run, EXIT_CHECK_FAILED, EXIT_ERROR, EXIT_OK};
use serde_json::Value;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn shape(name: &str) -> String {
    repo().join("shapes").join(format!("{name}.json")).display().to_string()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))).unwrap()
}

fn validate(schema_name: &str, doc: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{schema_name}.schema.json"));
    let schema = read_json(&path);
    let compiled = jsonschema::JSONSchema::compile(&schema).expect("schema compiles");
    let msgs: Vec<String> = match compiled.validate(doc) {
        Ok(()) => return,
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    panic!("{schema_name}: {msgs:#?}\n{doc:#}");
}

/// Runs `args` into a fresh directory under `root`, validates its outputs and
/// returns (exit code, summary).
fn linfty(root: &Path, tag: &str, args: &[&str]) -> (i32, Value, PathBuf) {
    let out = root.join(tag);
    let mut argv = vec!["linfty".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.extend(["--out".to_string(), out.display().to_string()]);
    let code = run(argv);
    let manifest = read_json(&out.join("manifest.json"));
    validate("manifest", &manifest);
    assert_eq!(manifest["exit_code"], code);
    let summary = if code == EXIT_ERROR { Value::Null } else { read_json(&out.join("summary.json")) };
    if code != EXIT_ERROR {
        validate(manifest["command"].as_str().unwrap(), &summary);
        for f in manifest["outputs"].as_array().unwrap() {
            assert!(out.join(f.as_str().unwrap()).exists(), "missing {f}");
        }
    }
    (code, summary, out)
}

#[test]
fn every_subcommand_validates() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let (sq, disk, rect, stad) = (shape("square"), shape("disk"), shape("rectangle"), shape("stadium"));
    let with = |s: &str, extra: &[&'static str]| -> Vec<String> {
        let mut v: Vec<String> = extra.iter().map(|x| x.to_string()).collect();
        v.extend(["--shape".to_string(), s.to_string()]);
        v
    };
    let cases: Vec<(&str, Vec<String>, i32)> = vec![
        ("domain", with(&disk, &["domain", "--h", "0.0625"]), EXIT_OK),
        ("ridge", with(&stad, &["ridge", "--h", "0.0625"]), EXIT_OK),
        ("inball", with(&rect, &["inball", "--h", "0.0625"]), EXIT_OK),
        ("inner", with(&rect, &["inner-dist", "--h", "0.0625"]), EXIT_OK),
        ("omega", with(&sq, &["omegamax", "--h", "0.0625"]), EXIT_OK),
        ("omega-abs", with(&sq, &["omegamax", "--abs", "0.1", "--h", "0.0625"]), EXIT_OK),
        ("eig", with(&sq, &["eig", "--p", "2,4", "--h", "0.0625"]), EXIT_OK),
        ("infharm", with(&disk, &["infharm", "--fixed", "ridge=1", "--h", "0.0625"]), EXIT_OK),
        ("sign", with(&rect, &["sign-changing", "--h", "0.0625"]), EXIT_OK),
        ("envelope", with(&sq, &["envelope", "--h", "0.0625"]), EXIT_OK),
        ("ball", with(&disk, &["calib", "ball"]), EXIT_OK),
        ("eigen-check", with(&disk, &["eigen-check"]), EXIT_OK),
        ("jstar", with(&sq, &["ot", "jstar", "--method", "both", "--h", "0.0625"]), EXIT_OK),
    ];
    for (tag, args, expected) in cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let (code, _, _) = linfty(root, tag, &args);
        assert_eq!(code, expected, "{tag}: {args:?}");
    }

    // file-driven subcommands reuse the artifacts above
    let ball = root.join("ball");
    let nu = ball.join("nu.csv").display().to_string();
    let flux = ball.join("flux.csv").display().to_string();
    let d_file = root.join("d.csv");
    {
        let (code, s, out) = linfty(root, "dist", &["dist", "--shape", &disk]);
        assert_eq!(code, EXIT_OK);
        assert!((s["r"].as_f64().unwrap() - 1.0).abs() < 0.09);
        fs::copy(out.join("d.csv"), &d_file).unwrap();
    }
    let d = d_file.display().to_string();
    let (code, s, _) = linfty(root, "rayleigh", &["rayleigh", "--field", &d, "--shape", &disk]);
    assert_eq!(code, EXIT_OK);
    assert!((s["stats"]["rayleigh"].as_f64().unwrap() - 1.0).abs() < 0.05);
    let (code, _, _) = linfty(root, "calib-check", &["calib", "check", "--u", &d, "--flux", &flux, "--shape", &disk]);
    assert!(code == EXIT_OK || code == EXIT_CHECK_FAILED);
    let (code, s, _) = linfty(
        root,
        "eigen-check-files",
        &["eigen-check", "--u", &d, "--lambda", "1", "--nu", &nu, "--flux", &flux, "--shape", &disk],
    );
    assert_eq!(code, EXIT_OK, "{s:#}");
    let (code, s, _) = linfty(root, "w1", &["ot", "w1", "--mu", &nu, "--rho", &nu, "--shape", &disk]);
    assert_eq!((code, s["value"].as_f64()), (EXIT_OK, Some(0.0)));
    let (code, s, _) = linfty(root, "kr", &["ot", "kr", "--partial", "--mu", &nu, "--shape", &disk]);
    assert_eq!(code, EXIT_OK);
    assert!((s["value"].as_f64().unwrap() - 1.0).abs() < 0.09);

    // a failing check exits with 2: the zero flux cannot calibrate anything
    let empty = root.join("empty.csv");
    fs::write(&empty, "ia,ja,ib,jb,flux\n").unwrap();
    let (code, s, _) = linfty(
        root,
        "zero-flux",
        &["calib", "check", "--u", &d, "--flux", &empty.display().to_string(), "--shape", &disk],
    );
    assert_eq!(code, EXIT_CHECK_FAILED);
    assert_eq!(s["pass"], false);
}

#[test]
fn errors_exit_one_and_still_write_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = linfty(dir.path(), "stadium", &["sign-changing", "--shape", &shape("stadium")]);
    assert_eq!(code, EXIT_ERROR);
    let (code, _, out) = linfty(dir.path(), "noshape", &["dist"]);
    assert_eq!(code, EXIT_ERROR);
    assert_eq!(read_json(&out.join("manifest.json"))["status"], "error");
    let (code, _, _) =
        linfty(dir.path(), "ball-square", &["calib", "ball", "--shape", &shape("square"), "--h", "0.125"]);
    assert_eq!(code, EXIT_ERROR);
    let (code, _, _) = linfty(dir.path(), "bad-fixed", &["infharm", "--fixed", "ridge=x", "--shape", &shape("disk")]);
    assert_eq!(code, EXIT_ERROR);
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(run(["linfty", "dist", "--bogus", "3"]), EXIT_ERROR);
    assert_eq!(run(["linfty", "frobnicate"]), EXIT_ERROR);
    assert_eq!(run(["linfty", "--help"]), EXIT_OK);
    assert_eq!(run(["linfty", "--version"]), EXIT_OK);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("neg").display().to_string();
    assert_eq!(run(["linfty", "dist", "--h", "-1", "--shape", &shape("square"), "--out", &out]), EXIT_ERROR);
    let out = dir.path().join("delta").display().to_string();
    assert_eq!(run(["linfty", "omegamax", "--delta", "1.5", "--shape", &shape("square"), "--out", &out]), EXIT_ERROR);
}

#[test]
fn dist_example_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let (code, s, out) = linfty(dir.path(), "d", &["dist", "--shape", &shape("square"), "--h", "0.015625"]);
    assert_eq!(code, EXIT_OK);
    for f in ["d.csv", "d.pgm", "summary.json", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert!((s["r"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn eig_example_reports_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let (code, s, _) = linfty(dir.path(), "e", &["eig", "--p", "2", "--shape", &shape("square"), "--h", "0.03125"]);
    assert_eq!(code, EXIT_OK);
    let lambda = s["lambda"].as_f64().unwrap();
    let exact = std::f64::consts::PI / std::f64::consts::SQRT_2;
    assert!((lambda - exact).abs() < 0.02 * exact, "lambda = {lambda}");
}

#[test]
fn dualcheck_example_passes_on_the_stadium() {
    let dir = tempfile::tempdir().unwrap();
    let (code, s, _) = linfty(dir.path(), "o", &["ot", "dualcheck", "--shape", &shape("stadium")]);
    assert_eq!(code, EXIT_OK, "{s:#}");
}

#[test]
fn identical_configs_give_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let shape_json = fs::read_to_string(repo().join("shapes/rectangle.json")).unwrap();
    fs::write(
        &cfg,
        format!(r#"{{"shape": {shape_json}, "h": 0.03125, "seed": 7, "schedule": [6, 3, 1.5], "kernel": "triangle"}}"#),
    )
    .unwrap();
    let cfg = cfg.display().to_string();
    let mut hashes = Vec::new();
    let mut files = Vec::new();
    for tag in ["a", "b"] {
        for (sub, args) in [("om", vec!["omegamax"]), ("ot", vec!["ot", "dualcheck", "--samples", "20"])] {
            let mut a = args.clone();
            a.extend(["--config", &cfg]);
            let (code, _, out) = linfty(dir.path(), &format!("{tag}-{sub}"), &a);
            assert_eq!(code, EXIT_OK);
            let m = read_json(&out.join("manifest.json"));
            hashes.push((sub, m["config_hash"].clone()));
            files.push((sub, fs::read(out.join("summary.json")).unwrap()));
        }
    }
    assert_eq!(files[0], files[2]);
    assert_eq!(files[1], files[3]);
    assert_ne!(hashes[0].1, hashes[1].1);
    // the config hash covers the output directory as part of the configuration
    assert_ne!(hashes[0].1, hashes[2].1);
}

#[test]
fn config_validation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"h": 0.0625, "tol": 0}"#).unwrap();
    let out = dir.path().join("o").display().to_string();
    assert_eq!(
        run(["linfty", "dist", "--config", &cfg.display().to_string(), "--shape", &shape("square"), "--out", &out]),
        EXIT_ERROR
    );
    fs::write(&cfg, r#"{"h": 0.0625, "typo": 1}"#).unwrap();
    assert_eq!(
        run(["linfty", "dist", "--config", &cfg.display().to_string(), "--shape", &shape("square"), "--out", &out]),
        EXIT_ERROR
    );
}

#[test]
fn figures_gallery_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let (code, s, out) = linfty(dir.path(), "f", &["figures"]);
    assert_eq!(code, EXIT_OK, "{s:#}");
    for name in ["tent", "peak", "square", "mountain-ridge"] {
        let img = linfty::domain::io::read_pgm(out.join(format!("omega_max_{name}.pgm"))).unwrap();
        assert_eq!(img.width, 129);
    }
    assert_eq!(s["figures"][1]["computed"], 0);
}
