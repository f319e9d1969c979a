use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const CUBIC: &str = r#"{"ladder": {"coeffs": [1.0], "rates": [2.0]}, "xi": 0.5, "modes": [10]}"#;

fn write_config(dir: &TempDir, body: &str) -> PathBuf {
    let path = dir.path().join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

fn gpspectra(job: &str, config: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpspectra"))
        .arg(job)
        .arg("--config")
        .arg(config)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn run(job: &str, body: &str) -> (i32, String, String) {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, body);
    let out = gpspectra(job, &config, &[]);
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn cubic_spectrum() {
    let (code, stdout, _) = run("spectrum", CUBIC);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("# gpspectra "));
    assert!(stdout.contains("\"residual_tol\": 1e-10"));
    let rows = data_rows(&stdout);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][3], "real_1");
    let mu: f64 = rows[0][5].parse().unwrap();
    assert!((mu + 1.903_496_6).abs() < 1e-6);
    assert_eq!(rows[1][3], "pair");
    let re: f64 = rows[1][5].parse().unwrap();
    let im: f64 = rows[1][6].parse().unwrap();
    assert!((re + 0.048_251_7).abs() < 1e-6);
    assert!((im - 9.990_694_6).abs() < 1e-6);
    assert_eq!(rows[1][8], "");
}

#[test]
fn out_file_matches_stdout_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        &dir,
        r#"{"ladder": {"coeffs": [1.0, 0.5], "rates": [2.0, 5.0]}, "xi": 0.5, "modes": [10, 100, 1000]}"#,
    );
    let stdout = gpspectra("spectrum", &config, &[]).stdout;
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(
        gpspectra("spectrum", &config, &["--out", a.to_str().unwrap()])
            .status
            .success()
    );
    assert!(gpspectra(
        "spectrum",
        &config,
        &["--out", b.to_str().unwrap(), "--jobs", "4"]
    )
    .status
    .success());
    let a = std::fs::read(a).unwrap();
    assert_eq!(a, std::fs::read(b).unwrap());
    assert_eq!(a, stdout);
}

#[test]
fn cubic_verify_passes() {
    let (code, stdout, _) = run("verify", CUBIC);
    assert_eq!(code, 0, "{stdout}");
    let rows = data_rows(&stdout);
    let names: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    for check in [
        "admissibility",
        "residual",
        "interlacing",
        "vieta_sum",
        "vieta_product",
        "conjugacy",
        "contour_count",
        "oracle_match",
    ] {
        assert!(names.contains(&check), "missing {check}");
    }
    assert!(rows.iter().all(|r| r[3] == "pass"));
}

#[test]
fn inadmissible_kernel_fails_verification() {
    let (code, stdout, _) = run(
        "verify",
        r#"{"ladder": {"coeffs": [1.5], "rates": [1.0]}, "xi": 0.5, "modes": [10]}"#,
    );
    assert_eq!(code, 1);
    assert!(stdout.contains("admissibility,1,1.0000000000000000e1,fail"));
}

#[test]
fn tampered_tolerance_fails_residual_check() {
    let body = r#"{"ladder": {"coeffs": [1.0], "rates": [2.0]}, "xi": 0.5, "modes": [10],
        "tolerances": {"residual_tol": 1e-30}}"#;
    let (code, stdout, _) = run("verify", body);
    assert_eq!(code, 1);
    assert!(stdout.contains("\nresidual,1,1.0000000000000000e1,fail,"));
    let (code, _, stderr) = run("spectrum", body);
    assert_eq!(code, 3);
    assert!(stderr.contains("mode n=1"), "{stderr}");
}

#[test]
fn configuration_errors_exit_2() {
    let cases = [
        (
            r#"{"ladder": {"coeffs": [1.0], "rates": [2.0]}, "xi": 1.0, "modes": [10]}"#,
            "xi must lie strictly inside (0,1)",
        ),
        (
            r#"{"ladder": {"coeffs": [1.0], "rates": [2.0]},
               "family": {"amplitude": 1, "scale": 1, "alpha": 0.5, "beta": 1, "truncation": 4},
               "xi": 0.5, "modes": [10]}"#,
            "found both",
        ),
        (
            r#"{"ladder": {"coeffs": [1.0], "rates": [2.0]}, "xi": 0.5, "modes": []}"#,
            "empty",
        ),
        (
            r#"{"ladder": {"coeffs": [1.0], "rates": [2.0]}, "xi": 0.5, "modes": [10], "colour": 1}"#,
            "unknown field",
        ),
        (
            r#"{"ladder": {"coeffs": [1.0], "rates": [2.0]}, "xi": 0.5, "modes": [10], "job": "sweep"}"#,
            "requested",
        ),
        ("not json", ""),
    ];
    for (body, message) in cases {
        let (code, _, stderr) = run("spectrum", body);
        assert_eq!(code, 2, "{body}");
        assert!(stderr.contains(message), "{stderr}");
    }
    let missing = gpspectra("spectrum", Path::new("/nonexistent/config.json"), &[]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn short_sweep_exits_2() {
    let (code, _, stderr) = run(
        "sweep",
        r#"{"ladder": {"coeffs": [1.0], "rates": [2.0]}, "xi": 0.5, "modes": {"a_min": 10, "factor": 10, "count": 3}}"#,
    );
    assert_eq!(code, 2);
    assert!(stderr.contains("at least 4 points"), "{stderr}");
}

fn footer_slope(text: &str, name: &str) -> f64 {
    let line = text
        .lines()
        .find(|l| l.starts_with(&format!("# fit {name} slope=")))
        .unwrap_or_else(|| panic!("no {name} fit in\n{text}"));
    let value = line.split_whitespace().nth(3).unwrap();
    value.trim_start_matches("slope=").parse().unwrap()
}

#[test]
fn finite_sum_sweep_error_order() {
    let (code, stdout, _) = run(
        "sweep",
        r#"{"ladder": {"coeffs": [1.0, 0.5], "rates": [2.0, 5.0]}, "xi": 0.5,
            "modes": {"a_min": 10, "factor": 10, "count": 4}}"#,
    );
    assert_eq!(code, 0);
    assert!(footer_slope(&stdout, "re_error") <= -0.9);
    let rows = data_rows(&stdout);
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r[9] == "tends_to_axis"));
}

#[test]
fn power_law_sweep_real_part_order() {
    let (code, stdout, _) = run(
        "sweep",
        r#"{"family": {"amplitude": 0.3, "scale": 1, "alpha": 0.5, "beta": 1, "truncation": 200},
            "xi": 0.5, "modes": {"a_min": 100, "factor": 10, "count": 4}}"#,
    );
    assert_eq!(code, 0);
    let slope = footer_slope(&stdout, "abs_re");
    assert!((slope + 0.5).abs() <= 0.15, "slope {slope}");
}

#[test]
fn oracle_check_and_asymptote() {
    let body =
        r#"{"ladder": {"coeffs": [1.0, 0.5], "rates": [2.0, 5.0]}, "xi": 0.5, "modes": [10, 100]}"#;
    let (code, stdout, _) = run("oracle-check", body);
    assert_eq!(code, 0);
    let rows = data_rows(&stdout);
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r[3] == "pass"));

    let (code, stdout, _) = run("asymptote", body);
    assert_eq!(code, 0);
    let rows = data_rows(&stdout);
    assert_eq!(rows.len(), 2);
    let err: Vec<f64> = rows.iter().map(|r| r[6].parse().unwrap()).collect();
    assert!(err[1] < err[0]);
}

#[test]
fn documented_examples_run() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/examples");
    for job in ["spectrum", "verify", "sweep", "oracle-check", "asymptote"] {
        let config = dir.join(format!("{job}.json"));
        let out = gpspectra(job, &config, &["--jobs", "2"]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{job}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains(&format!("# job: {job}\n")));
    }
}
