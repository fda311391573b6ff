mod common;

use std::process::Command;

use common::*;
use wavekit::cli::{read_profile_csv, report_json, wave, Speed};

fn wavekit(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_wavekit"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn path(name: &str) -> String {
    problem_path(name).to_string_lossy().into_owned()
}

#[test]
fn validate_exit_codes() {
    let (code, stdout, stderr) = wavekit(&["validate", &path("ex1")]);
    assert_eq!(code, 0, "{stderr}");
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["passed"], true);

    let (code, stdout, _) = wavekit(&["validate", &path("ex1"), "--param", "K=0.1"]);
    assert_eq!(code, 2);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let failed: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(
        failed.contains(&"g_running_integral_positive"),
        "{failed:?}"
    );
}

#[test]
fn malformed_expression_exits_with_parse_code() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.toml");
    std::fs::write(
        &file,
        "g = \"1\"\nf = \"0\"\nD = \"(1-u\"\nrho = \"u-u^2\"\n",
    )
    .unwrap();
    let (code, _, stderr) = wavekit(&["validate", file.to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(stderr.contains("`D`"), "{stderr}");

    std::fs::write(&file, "g = \"1\"\nf = \"0\"\n").unwrap();
    assert_eq!(wavekit(&["threshold", file.to_str().unwrap()]).0, 3);
}

#[test]
fn usage_errors_exit_with_four() {
    assert_eq!(
        wavekit(&[
            "sweep",
            &path("kpp"),
            "--from",
            "3",
            "--to",
            "1",
            "--steps",
            "4"
        ])
        .0,
        4
    );
    assert_eq!(
        wavekit(&[
            "sweep",
            &path("kpp"),
            "--from",
            "1",
            "--to",
            "3",
            "--steps",
            "0"
        ])
        .0,
        4
    );
    assert_eq!(wavekit(&["threshold", "/nonexistent/problem.toml"]).0, 4);
    assert_eq!(
        wavekit(&["wave", &path("kpp"), "--speed", "3", "--speed-offset", "1"]).0,
        4
    );
}

#[test]
fn non_monostable_reaction_is_a_hypothesis_failure() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.toml");
    std::fs::write(
        &file,
        "g = \"1\"\nf = \"0\"\nD = \"1\"\nrho = \"u-u^2+0.1\"\n",
    )
    .unwrap();
    assert_eq!(wavekit(&["threshold", file.to_str().unwrap()]).0, 2);
}

#[test]
fn threshold_reports_json() {
    let (code, stdout, _) = wavekit(&["threshold", &path("kpp")]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert!((v["c_hat"].as_f64().unwrap() - 2.0).abs() < 1e-4);
    assert!(v["bracket"]["lower"].is_number() && v["per_interval"].is_array());
}

#[test]
fn sweep_flips_between_1_75_and_2() {
    let (code, stdout, _) = wavekit(&[
        "sweep",
        &path("kpp"),
        "--from",
        "1",
        "--to",
        "3",
        "--steps",
        "8",
    ]);
    assert_eq!(code, 0);
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("c,feasible_per_interval,exists"));
    let rows: Vec<(f64, String)> = lines
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            (cols[0].parse().unwrap(), cols[2].to_string())
        })
        .collect();
    assert_eq!(rows.len(), 9);
    for (c, e) in rows {
        assert_eq!(e, if c >= 2.0 { "yes" } else { "no" }, "c = {c}");
    }
}

#[test]
fn sweep_respects_thread_cap() {
    let out = Command::new(env!("CARGO_BIN_EXE_wavekit"))
        .args([
            "sweep",
            &path("kpp"),
            "--from",
            "2",
            "--to",
            "3",
            "--steps",
            "2",
        ])
        .env(wavekit::cli::THREADS_ENV, "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let bad = Command::new(env!("CARGO_BIN_EXE_wavekit"))
        .args([
            "sweep",
            &path("kpp"),
            "--from",
            "2",
            "--to",
            "3",
            "--steps",
            "2",
        ])
        .env(wavekit::cli::THREADS_ENV, "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(4));
}

#[test]
fn wave_outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let loaded = shipped("kpp");
    let (report, files) = wave(&loaded, Speed::Absolute(3.0), dir.path()).unwrap();

    let text = std::fs::read_to_string(&files.json).unwrap();
    assert_eq!(text, report_json(&report));
    let reread: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(reread, serde_json::to_value(&report).unwrap());
    assert_eq!(reread["classification"], "classical");
    assert_eq!(reread["verdict"]["exists"], "yes");

    let rows =
        read_profile_csv(&std::fs::read_to_string(files.csv.as_ref().unwrap()).unwrap()).unwrap();
    let profile = report.profile.as_ref().unwrap();
    assert_eq!(rows.len(), profile.points.len());
    for (r, q) in rows.iter().zip(&profile.points) {
        assert_eq!(*r, [q.t, q.u, q.z, q.phi]);
    }
    assert!(rows.windows(2).all(|w| w[1][1] < w[0][1]));

    // u′ = φ along the re-read rows
    let p = &loaded.problem;
    for w in rows.windows(3).filter(|w| w[1][1] > 0.05 && w[1][1] < 0.95) {
        let (t0, t1, t2) = (w[0][0], w[1][0], w[2][0]);
        let du = w[0][1] * (t1 - t2) / ((t0 - t1) * (t0 - t2))
            + w[1][1] * (2.0 * t1 - t0 - t2) / ((t1 - t0) * (t1 - t2))
            + w[2][1] * (t1 - t0) / ((t2 - t0) * (t2 - t1));
        let d = p.d.eval(w[1][1]).unwrap();
        assert!((du - w[1][2] / d).abs() < 1e-3 * (1.0 + du.abs()), "{w:?}");
    }

    let svg = std::fs::read_to_string(&files.svg).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<path").count(), 2);
}

#[test]
fn wave_without_solution_writes_no_profile() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, _) = wavekit(&[
        "wave",
        &path("kpp"),
        "--speed",
        "1.5",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["verdict"]["exists"], "no");
    assert!(!dir.path().join("kpp.csv").exists());
    assert!(dir.path().join("kpp.svg").exists());
}

#[test]
fn speed_offset_is_relative_to_the_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, _) = wavekit(&[
        "wave",
        &path("ex1"),
        "--param",
        "K=1",
        "--speed-offset",
        "0.5",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let (c, c_hat) = (v["c"].as_f64().unwrap(), v["c_hat"].as_f64().unwrap());
    assert!((c - c_hat - 0.5).abs() < 1e-12);
    assert_eq!(v["classification"], "classical");
}
