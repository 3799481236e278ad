use std::fs;
use std::path::Path;

use serde_json::Value;
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn mbe(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("mbe").chain(args.iter().copied());
    let code = mbe_cli::run(argv, &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &Path, seed: u64) {
    let r = mbe(&["generate", "--seed", &seed.to_string(), "--out", s(dir), "-q"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Rewrites one column of every data row of a cohort CSV.
fn rewrite_column(path: &Path, column: &str, f: impl Fn(&str) -> String) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let idx = header.split(',').position(|c| c == column).unwrap();
    let mut out = format!("{header}\n");
    for line in lines {
        let mut cells: Vec<String> = line.split(',').map(str::to_string).collect();
        cells[idx] = f(&cells[idx]);
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(path, out).unwrap();
}

#[test]
fn generate_is_deterministic() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    generate(a.path(), 7);
    generate(b.path(), 7);
    for f in ["pre.csv", "post.csv", "truth.json"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let truth = read_json(&a.path().join("truth.json"));
    assert!(truth["true_att"]["rd"].as_f64().unwrap() < 0.0);
}

#[test]
fn zero_pre_cohort_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let r = mbe(&["generate", "--seed", "1", "--n-pre", "0", "--out", s(dir.path())]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("n_pre"), "{}", r.stderr);
}

#[test]
fn stochastic_commands_require_a_seed() {
    let dir = TempDir::new().unwrap();
    let r = mbe(&["generate", "--out", s(dir.path())]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("seed"));
}

#[test]
fn estimate_reports_every_requested_scale() {
    let dir = TempDir::new().unwrap();
    generate(dir.path(), 11);
    let (pre, post) = (dir.path().join("pre.csv"), dir.path().join("post.csv"));
    let r = mbe(&[
        "estimate",
        "--pre",
        s(&pre),
        "--post",
        s(&post),
        "--seed",
        "3",
        "--replicates",
        "200",
        "--scale",
        "rr",
        "--scale",
        "rd",
        "--out",
        s(dir.path()),
        "-q",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let report = read_json(&dir.path().join("report.json"));
    let scales: Vec<&str> = report["estimates"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["scale"].as_str().unwrap())
        .collect();
    assert_eq!(scales, ["rr", "rd"]);
    for e in report["estimates"].as_array().unwrap() {
        let (lo, pt, hi) = (
            e["ci_low"].as_f64().unwrap(),
            e["point"].as_f64().unwrap(),
            e["ci_high"].as_f64().unwrap(),
        );
        assert!(lo <= pt && pt <= hi);
    }
    assert!(dir.path().join("negative_control_curve.csv").exists());
    assert!(dir.path().join("dose_transport_curve.csv").exists());
    assert!(r.stdout.contains("rd"));
}

#[test]
fn report_matches_the_published_schema() {
    let dir = TempDir::new().unwrap();
    generate(dir.path(), 12);
    let (pre, post) = (dir.path().join("pre.csv"), dir.path().join("post.csv"));
    let r = mbe(&[
        "estimate",
        "--pre",
        s(&pre),
        "--post",
        s(&post),
        "--seed",
        "4",
        "--replicates",
        "100",
        "--scale",
        "rd",
        "--scale",
        "rr",
        "--scale",
        "or",
        "--out",
        s(dir.path()),
        "-q",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let schema_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas/report.schema.json");
    let schema = read_json(&schema_path);
    let validator = jsonschema::validator_for(&schema).unwrap();
    let report = read_json(&dir.path().join("report.json"));
    let errors: Vec<String> = validator.iter_errors(&report).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

#[test]
fn no_treated_patients_is_a_statistical_failure() {
    let dir = TempDir::new().unwrap();
    generate(dir.path(), 13);
    let post = dir.path().join("post.csv");
    rewrite_column(&post, "treatment", |_| "0".into());
    let pre = dir.path().join("pre.csv");
    let r = mbe(&[
        "estimate",
        "--pre",
        s(&pre),
        "--post",
        s(&post),
        "--bootstrap",
        "none",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(r.code, 3);
    assert!(r.stderr.contains("no treated patients"), "{}", r.stderr);
}

#[test]
fn malformed_outcome_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    generate(dir.path(), 14);
    let pre = dir.path().join("pre.csv");
    rewrite_column(&pre, "outcome", |_| "2".into());
    let r = mbe(&["fit", "--pre", s(&pre), "--out", s(dir.path())]);
    assert_eq!(r.code, 2, "{}", r.stderr);
}

#[test]
fn missing_input_file_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let r = mbe(&[
        "fit",
        "--pre",
        s(&dir.path().join("absent.csv")),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(r.code, 2);
}

#[test]
fn fit_then_reuse_model() {
    let dir = TempDir::new().unwrap();
    generate(dir.path(), 15);
    let (pre, post) = (dir.path().join("pre.csv"), dir.path().join("post.csv"));
    assert_eq!(mbe(&["fit", "--pre", s(&pre), "--out", s(dir.path()), "-q"]).code, 0);
    let model = dir.path().join("model.json");
    let refit_dir = dir.path().join("refit");
    let loaded_dir = dir.path().join("loaded");
    let base = [
        "estimate",
        "--pre",
        s(&pre),
        "--post",
        s(&post),
        "--bootstrap",
        "fixed",
        "--seed",
        "2",
        "--replicates",
        "100",
        "-q",
    ];
    let mut a = base.to_vec();
    a.extend(["--out", s(&refit_dir)]);
    let mut b = base.to_vec();
    b.extend(["--model", s(&model), "--out", s(&loaded_dir)]);
    assert_eq!(mbe(&a).code, 0);
    assert_eq!(mbe(&b).code, 0);
    let (ra, rb) = (
        read_json(&refit_dir.join("report.json")),
        read_json(&loaded_dir.join("report.json")),
    );
    assert_eq!(ra["estimates"], rb["estimates"]);
    assert_eq!(rb["model_source"], "loaded");

    // a loaded model cannot be refitted inside the full bootstrap
    let mut c = base.to_vec();
    c[6] = "full";
    c.extend(["--model", s(&model), "--out", s(&loaded_dir)]);
    assert_eq!(mbe(&c).code, 2);
}

#[test]
fn config_file_is_merged_and_flags_win() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"seed": 5, "n_pre": 400, "n_post": 120, "quiet": true}"#).unwrap();
    let from_file = dir.path().join("file");
    let overridden = dir.path().join("flag");
    assert_eq!(mbe(&["generate", "--config", s(&cfg), "--out", s(&from_file)]).code, 0);
    assert_eq!(
        mbe(&[
            "generate",
            "--config",
            s(&cfg),
            "--n-pre",
            "500",
            "--out",
            s(&overridden)
        ])
        .code,
        0
    );
    let a = read_json(&from_file.join("truth.json"));
    let b = read_json(&overridden.join("truth.json"));
    assert_eq!(
        (a["n_pre"].as_u64(), a["n_post"].as_u64(), a["seed"].as_u64()),
        (Some(400), Some(120), Some(5))
    );
    assert_eq!(b["n_pre"].as_u64(), Some(500));

    fs::write(&cfg, r#"{"seed": 5, "no_such_key": 1}"#).unwrap();
    assert_eq!(mbe(&["generate", "--config", s(&cfg), "--out", s(&from_file)]).code, 2);
}

#[test]
fn zero_threads_is_rejected() {
    let dir = TempDir::new().unwrap();
    let r = mbe(&["generate", "--seed", "1", "--threads", "0", "--out", s(dir.path())]);
    assert_eq!(r.code, 2);
}

#[test]
fn diagnose_and_sensitivity_write_their_artifacts() {
    let dir = TempDir::new().unwrap();
    generate(dir.path(), 16);
    let (pre, post) = (dir.path().join("pre.csv"), dir.path().join("post.csv"));
    let r = mbe(&[
        "diagnose",
        "--pre",
        s(&pre),
        "--post",
        s(&post),
        "--seed",
        "1",
        "--replicates",
        "100",
        "--out",
        s(dir.path()),
        "-q",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let diag = read_json(&dir.path().join("diagnostics.json"));
    assert!(diag.to_string().contains("\"verdict\""));

    let r = mbe(&[
        "sensitivity",
        "--pre",
        s(&pre),
        "--post",
        s(&post),
        "--variants",
        "default,default",
        "--out",
        s(dir.path()),
        "-q",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let sens = read_json(&dir.path().join("sensitivity.json"));
    assert_eq!(sens["tables"][0]["spread"].as_f64(), Some(0.0));
    let csv = fs::read_to_string(dir.path().join("sensitivity.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn simulate_all_scenarios_is_deterministic() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let run = |d: &Path| {
        mbe(&[
            "simulate",
            "--scenario",
            "all",
            "--seed",
            "9",
            "--replicates",
            "20",
            "--out",
            s(d),
            "-q",
        ])
    };
    let (ra, rb) = (run(a.path()), run(b.path()));
    assert_eq!(ra.code, 0, "{}", ra.stderr);
    assert_eq!(rb.code, 0);
    // the last line names the output directory
    let table = |out: &str| {
        out.lines()
            .filter(|l| !l.starts_with("wrote"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(table(&ra.stdout), table(&rb.stdout));
    let csv = fs::read(a.path().join("bias_report.csv")).unwrap();
    assert_eq!(csv, fs::read(b.path().join("bias_report.csv")).unwrap());
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 6);
    assert_eq!(
        fs::read(a.path().join("bias_report.json")).unwrap(),
        fs::read(b.path().join("bias_report.json")).unwrap()
    );
}

#[test]
fn unknown_scenario_lists_valid_names() {
    let dir = TempDir::new().unwrap();
    let r = mbe(&[
        "simulate",
        "--scenario",
        "sunspots",
        "--seed",
        "1",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(r.code, 2);
    assert!(
        r.stderr.contains("baseline") && r.stderr.contains("misspecification"),
        "{}",
        r.stderr
    );
}

#[test]
fn help_exits_cleanly() {
    let r = mbe(&["--help"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("simulate"));
}
