//! End-to-end runs of the `gini-ellipse` binary: exit codes, files and
//! byte-exact reruns.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gini-ellipse"));
    c.env_remove("GINI_ELLIPSE_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn normal(mu: &str, sigma: &str) -> String {
    format!(
        r#"{{"family": "elliptical", "mu": {mu}, "sigma": {sigma}, "radial": {{"kind": "normal"}}}}"#
    )
}

fn pair_config(x: &str, y: &str, extra: &str) -> String {
    format!(
        r#"{{"schema_version": 1, "model_x": {x}, "model_y": {y}, "seed": 17, "sample_count": 20000{extra}}}"#
    )
}

#[test]
fn sample_writes_csv_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    let body = pair_config(
        &normal("[0, 0]", "[[1, 0], [0, 1]]"),
        &normal("[0, 0]", "[[2, 0], [0, 2]]"),
        "",
    );
    let cfg = write_config(dir.path(), "c.json", &body);
    let out = dir.path().join("draws.csv");
    let o = run(&[
        "sample",
        "--config",
        cfg.to_str().unwrap(),
        "--samples",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let mut rdr = csv::Reader::from_path(&out).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["x1", "x2"]);
    let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r.len() == 2));

    let meta: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("draws.csv.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["seed"], 17);
    assert_eq!(meta["sample_count"], 10);
    assert_eq!(meta["which"], "x");
}

#[test]
fn sample_is_byte_identical_across_reruns_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let x = r#"{"family": "scale_mixture", "mu": [1, 0, -1], "sigma": [[1, 0.2, 0], [0.2, 1, 0], [0, 0, 2]],
               "base": {"kind": "normal"}, "mixing": {"kind": "inverse_gamma", "shape": 2.5, "rate": 2.5}}"#;
    let body =
        format!(r#"{{"schema_version": 1, "model_x": {x}, "seed": 99, "sample_count": 50000}}"#);
    let cfg = write_config(dir.path(), "c.json", &body);
    let mut files = Vec::new();
    for (k, threads) in ["1", "4", "4"].iter().enumerate() {
        let out = dir.path().join(format!("s{k}.csv"));
        let o = bin()
            .env("GINI_ELLIPSE_THREADS", threads)
            .args([
                "sample",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        files.push(fs::read(&out).unwrap());
    }
    assert!(files.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn zero_scatter_gives_constant_rows() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        r#"{{"schema_version": 1, "model_x": {}, "sample_count": 25}}"#,
        normal("[1.5, -2]", "[[0, 0], [0, 0]]")
    );
    let cfg = write_config(dir.path(), "c.json", &body);
    let o = run(&["sample", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x1,x2"));
    assert!(lines.all(|l| l == "1.5,-2.0"));
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(
        code(&run(&["check", "--config", missing.to_str().unwrap()])),
        2
    );

    let bad = write_config(dir.path(), "bad.json", r#"{"schema_version": 1}"#);
    assert_eq!(code(&run(&["run", "--config", bad.to_str().unwrap()])), 2);

    let mismatch = pair_config(
        &normal("[0, 0]", "[[1, 0], [0, 1]]"),
        &normal("[0, 0, 0]", "[[1, 0, 0], [0, 1, 0], [0, 0, 1]]"),
        "",
    );
    let cfg = write_config(dir.path(), "dims.json", &mismatch);
    let o = run(&["check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("dimension"));

    let not_psd = format!(
        r#"{{"schema_version": 1, "model_x": {}}}"#,
        normal("[0, 0]", "[[1, 2], [2, 1]]")
    );
    let cfg = write_config(dir.path(), "psd.json", &not_psd);
    assert_eq!(
        code(&run(&["sample", "--config", cfg.to_str().unwrap()])),
        2
    );

    assert_eq!(code(&run(&["tail-rate", "--sigma", "[[1, 2], [0, 1]]"])), 2);
    assert_eq!(code(&run(&["gini", "1"])), 0);
    let o = bin()
        .env("GINI_ELLIPSE_THREADS", "zero")
        .args(["gini", "1", "2"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn mixed_families_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let t = r#"{"family": "elliptical", "mu": [0, 0], "sigma": [[2, 0], [0, 2]], "radial": {"kind": "student_t", "nu": 4}}"#;
    let cfg = write_config(
        dir.path(),
        "c.json",
        &pair_config(&normal("[0, 0]", "[[1, 0], [0, 1]]"), t, ""),
    );
    let o = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn check_reports_conditions_and_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let body = pair_config(
        &normal("[0, 0]", "[[1, 0], [0, 1]]"),
        &normal("[0, 0]", "[[2, 1], [1, 2]]"),
        "",
    );
    let cfg = write_config(dir.path(), "c.json", &body);
    let o = run(&["check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["conditions"]["forward"]["loewner"]["is_psd"], true);
    let preds = v["predictions"].as_array().unwrap();
    assert!(preds
        .iter()
        .any(|p| p["source"] == "loewner" && p["relation"] == "st" && p["dominant"] == "y"));

    // identical scatter: every condition in both directions
    let same = pair_config(
        &normal("[0, 0]", "[[1, 0.3], [0.3, 1]]"),
        &normal("[0, 0]", "[[1, 0.3], [0.3, 1]]"),
        "",
    );
    let cfg = write_config(dir.path(), "same.json", &same);
    let v: Value =
        serde_json::from_slice(&run(&["check", "--config", cfg.to_str().unwrap()]).stdout).unwrap();
    for dir in ["forward", "reverse"] {
        assert_eq!(v["conditions"][dir]["loewner"]["is_psd"], true);
        assert_eq!(v["conditions"][dir]["centered"]["is_psd"], true);
    }
    let preds = v["predictions"].as_array().unwrap();
    assert!(preds
        .iter()
        .any(|p| p["relation"] == "st" && p["dominant"] == "x"));
    assert!(preds
        .iter()
        .any(|p| p["relation"] == "st" && p["dominant"] == "y"));
}

#[test]
fn run_record_is_byte_identical_and_carries_tail_rate() {
    let dir = tempfile::tempdir().unwrap();
    let body = pair_config(
        &normal("[0, 0]", "[[1, 0], [0, 1]]"),
        &normal("[0, 0]", "[[2, 0.5], [0.5, 2]]"),
        r#", "tests": ["conditions", "st", "icx", "tail_rate", "tail_identity"]"#,
    );
    let cfg = write_config(dir.path(), "c.json", &body);
    let mut records = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}.json"));
        let o = run(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        records.push(fs::read(&out).unwrap());
        assert!(dir.path().join(format!("run{k}.json.timing.json")).exists());
        assert!(dir
            .path()
            .join(format!("run{k}.json.survival_0.csv"))
            .exists());
    }
    assert_eq!(records[0], records[1]);
    assert_eq!(
        fs::read(dir.path().join("run0.json.survival_0.csv")).unwrap(),
        fs::read(dir.path().join("run1.json.survival_0.csv")).unwrap()
    );

    let v: Value = serde_json::from_slice(&records[0]).unwrap();
    assert_eq!(v["tail_rate"]["rate"].as_f64(), Some(-1.0 / 16.0));
    assert_eq!(v["status"], "consistent");
    assert_eq!(v["tail_identity"]["pathwise_ok"], true);
    // the config echo parses back to the same config
    let echo = serde_json::to_string(&v["config"]).unwrap();
    let a = gini_ellipse_cli::config::ExperimentConfig::from_json(&echo).unwrap();
    let b = gini_ellipse_cli::config::ExperimentConfig::load(&cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn scale_mixture_first_row_instance_is_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let mixture = |sigma: &str| {
        format!(
            r#"{{"family": "scale_mixture", "mu": [0, 0, 0], "sigma": {sigma},
                 "base": {{"kind": "normal"}}, "mixing": {{"kind": "inverse_gamma", "shape": 2.5, "rate": 2.5}}}}"#
        )
    };
    let body = pair_config(
        &mixture("[[1, 0, 0], [0, 1, 0], [0, 0, 1]]"),
        &mixture("[[1, 0.3, 0.3], [0.3, 1, 0], [0.3, 0, 1]]"),
        "",
    );
    let cfg = write_config(dir.path(), "c.json", &body);
    let o = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let tests = v["ordering"]["tests"].as_array().unwrap();
    assert!(tests.iter().any(|t| t["relation"] == "st"
        && t["sources"]
            .as_array()
            .unwrap()
            .iter()
            .any(|s| s == "first_row_shift")));
    assert!(
        tests.iter().all(|t| t["verdict"] == "consistent"),
        "{tests:#?}"
    );
}

#[test]
fn cauchy_icx_is_inapplicable_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let cauchy = |sigma: &str| {
        format!(
            r#"{{"family": "elliptical", "mu": [0, 0], "sigma": {sigma}, "radial": {{"kind": "student_t", "nu": 1}}}}"#
        )
    };
    // equal marginals, so the icx and mean predictions apply
    let body = pair_config(
        &cauchy("[[1, 0], [0, 1]]"),
        &cauchy("[[1, 0.5], [0.5, 1]]"),
        r#", "tests": ["icx"]"#,
    );
    let cfg = write_config(dir.path(), "c.json", &body);
    let o = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let tests = v["ordering"]["tests"].as_array().unwrap();
    assert!(!tests.is_empty());
    assert!(tests.iter().all(|t| t["verdict"] == "inapplicable"));
}

#[test]
fn rejected_prediction_exits_4() {
    // Identical laws drawn independently with a near-zero z threshold: Monte
    // Carlo noise alone rejects one of the two mirrored predictions.
    let dir = tempfile::tempdir().unwrap();
    let m = normal("[0, 0]", "[[1, 0], [0, 1]]");
    let body = pair_config(
        &m,
        &m,
        r#", "tests": ["st"], "coupled": false, "z_threshold": 1e-9"#,
    );
    let cfg = write_config(dir.path(), "c.json", &body);
    let o = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["status"], "violated");
}

#[test]
fn tail_rate_from_sigma_and_from_config() {
    let o = run(&["tail-rate", "--sigma", "[[1, 0], [0, 1]]"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rate"].as_f64(), Some(-0.0625));

    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        r#"{{"schema_version": 1, "model_x": {}}}"#,
        normal("[0, 0, 0]", "[[1, 0, 0], [0, 1, 0], [0, 0, 1]]")
    );
    let cfg = write_config(dir.path(), "c.json", &body);
    let v: Value =
        serde_json::from_slice(&run(&["tail-rate", "--config", cfg.to_str().unwrap()]).stdout)
            .unwrap();
    assert_eq!(v["rate"].as_f64(), Some(-1.0 / 64.0));

    let nine = serde_json::to_string(
        &(0..9)
            .map(|i| {
                (0..9)
                    .map(|j| f64::from(u8::from(i == j)))
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>(),
    )
    .unwrap();
    assert_eq!(code(&run(&["tail-rate", "--sigma", &nine])), 2);
    let o = run(&[
        "tail-rate",
        "--sigma",
        &nine,
        "--restarts",
        "8",
        "--seed",
        "3",
    ]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["rate_bound"].as_f64().unwrap() < 0.0);
}

#[test]
fn tail_identity_csv() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        r#"{{"schema_version": 1, "model_x": {}, "sample_count": 20000, "thresholds": [0.5, 2]}}"#,
        normal("[0, 0, 0]", "[[1, 0, 0], [0, 1, 0], [0, 0, 1]]")
    );
    let cfg = write_config(dir.path(), "c.json", &body);
    let o = run(&["tail-identity", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "t,p_direct,p_union,sigma");
    assert_eq!(lines.len(), 3);
    for l in &lines[1..] {
        let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(f[1], f[2]);
    }
}

#[test]
fn gini_command_forms() {
    let v: Value = serde_json::from_slice(&run(&["gini", "1", "2", "3"]).stdout).unwrap();
    assert_eq!(v["values"][0].as_f64(), Some(8.0));
    let v: Value =
        serde_json::from_slice(&run(&["gini", "--normalized", "--", "-1", "2", "5"]).stdout)
            .unwrap();
    assert_eq!(v["values"][0].as_f64(), Some(24.0 / 9.0));

    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("v.csv");
    fs::write(&input, "a,b\n0,1\n3,3\n").unwrap();
    let o = run(&[
        "gini",
        "--input",
        input.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "gini\n2.0\n0.0\n");
}

#[test]
fn reproduce_passes() {
    let o = run(&["reproduce"]);
    assert_eq!(code(&o), 0);
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.contains("-0.0625"));
    assert!(!table.contains("FAIL"));
    let again = run(&["reproduce", "--json"]);
    let v: Value = serde_json::from_slice(&again.stdout).unwrap();
    assert_eq!(v["all_pass"], true);
}
