//! End-to-end checks of the binary: exit codes, output shapes and
//! rerun determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sadic"))
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sadic-cli-test-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn validate_accepts_shipped_rules() {
    for name in ["thue_morse.json", "period_doubling.json", "block_4x3.json"] {
        let out = bin().args(["validate", &data(name)]).output().unwrap();
        assert!(out.status.success(), "{name}: {out:?}");
        let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        assert_eq!(v["valid"], serde_json::Value::Bool(true));
    }
}

#[test]
fn validate_rejects_bad_letter_with_status_one() {
    let dir = tmp_dir("badsub");
    let path = dir.join("bad.json");
    std::fs::write(
        &path,
        r#"{"name":"bad","dim":1,"alphabet":["a","b"],"expansion":[2],"rules":{"a":[1,3],"b":[2,1]}}"#,
    )
    .unwrap();
    let out = bin()
        .args(["validate", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["valid"], serde_json::Value::Bool(false));
    let text = v["violations"][0].as_str().unwrap();
    assert!(text.contains("letter out of range"), "{text}");
    assert!(text.contains("offset [1]"), "{text}");
}

#[test]
fn mahler_jensen_of_thue_morse_difference_vanishes() {
    let out = bin()
        .args([
            "mahler",
            "--poly",
            &format!("substitution:{}", data("thue_morse.json")),
            "--method",
            "jensen",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    let row = text.lines().find(|l| !l.starts_with('#')).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[0], "0");
    assert_eq!(fields[1], "0");
    assert_eq!(fields[2], "jensen_roots");
}

#[test]
fn mahler_quadrature_of_explicit_polynomial() {
    let out = bin()
        .args([
            "mahler", "--poly", "coeffs:2", "--method", "quad", "--grid", "64",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    let row = text.lines().find(|l| !l.starts_with('#')).unwrap();
    let value: f64 = row.split(',').next().unwrap().parse().unwrap();
    assert!((value - 2.0f64.ln()).abs() < 1e-12);
}

#[test]
fn criterion_report_for_shipped_mix() {
    let out = bin()
        .args([
            "criterion",
            "--subs",
            &format!("{},{}", data("thue_morse.json"), data("period_doubling.json")),
            "--directive",
            "bernoulli:0.5,0.5",
            "--steps",
            "2000",
            "--t-samples",
            "24",
            "--threads",
            "2",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let report = &v["report"];
    let margin = report["margin"].as_f64().unwrap();
    assert!((margin - 0.34657).abs() < 0.05, "margin {margin}");
    assert_eq!(report["verdict"].as_str().unwrap(), "positive_margin");
}

#[test]
fn lyapunov_csv_has_samples_and_summary() {
    let out = bin()
        .args([
            "lyapunov",
            "--subs",
            "thue_morse",
            "--directive",
            "const:1",
            "--steps",
            "1000",
            "--t-samples",
            "4",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 5); // 4 samples + summary
    assert!(rows[4].starts_with("summary,"));
}

#[test]
fn simulate_is_idempotent_and_caches() {
    let dir = tmp_dir("sim");
    let cache = dir.join("cache");
    let prefix = dir.join("run").to_string_lossy().into_owned();
    let run = |out_prefix: &str| {
        let mut cmd = bin();
        cmd.env("SADIC_CACHE_DIR", &cache);
        cmd.args([
            "simulate",
            "--subs",
            &format!("{},{}", data("thue_morse.json"), data("period_doubling.json")),
            "--directive",
            "word:12",
            "--level",
            "10",
            "--radius",
            "8",
            "--out",
            out_prefix,
        ]);
        let out = cmd.output().unwrap();
        assert!(out.status.success(), "{out:?}");
    };
    run(&prefix);
    let read_all = |prefix: &str| {
        ["patch.txt", "correlations.csv", "diffraction.csv", "plot.gp"]
            .map(|ext| std::fs::read(format!("{prefix}.{ext}")).unwrap())
    };
    let first = read_all(&prefix);
    // the cache directory is populated and the rerun reproduces every byte
    assert!(cache.read_dir().unwrap().next().is_some());
    run(&prefix);
    let second = read_all(&prefix);
    assert_eq!(first, second);
}

#[test]
fn cell_cap_exceeds_with_status_two() {
    let dir = tmp_dir("cap");
    let out = bin()
        .args([
            "simulate",
            "--subs",
            &data("thue_morse.json"),
            "--directive",
            "const:1",
            "--level",
            "30",
            "--out",
            dir.join("x").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(err["error"]["kind"].as_str().unwrap(), "cell_cap_exceeded");
}

#[test]
fn bad_directive_is_status_one() {
    let out = bin()
        .args([
            "lyapunov",
            "--subs",
            "thue_morse",
            "--directive",
            "bogus:1",
            "--steps",
            "1000",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(err["error"]["kind"].as_str().unwrap(), "bad_directive");
}

#[test]
fn fourier_eval_at_zero_counts_digits() {
    let out = bin()
        .args(["fourier-eval", "--sub", "period_doubling", "--grid", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    let first = text.lines().find(|l| !l.starts_with('#')).unwrap();
    // at t=0 the matrix is the counting matrix [[1,2],[1,0]]
    assert_eq!(first, "0,1,0,2,0,1,0,0,0");
}
