//! End-to-end tests of the binary: exit codes, file emission, and
//! byte-identical reruns.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_manin-lab");

/// A fresh scratch directory per test, cleaned up on drop.
struct Scratch(PathBuf);

impl Scratch {
    fn new(name: &str) -> Self {
        let dir = std::env::temp_dir().join(format!(
            "manin-lab-cli-{}-{}",
            name,
            std::process::id()
        ));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }

    fn write(&self, name: &str, body: &str) -> PathBuf {
        let p = self.path(name);
        fs::write(&p, body).unwrap();
        p
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.0);
    }
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no exit code")
}

const P1P1_B1: &str = r#"{
    "n": 2, "r": 1, "m": 1, "d1": 1, "d2": 1,
    "form": {"monomials": [
        {"exponents": [1, 0, 1, 0], "coeff": 1},
        {"exponents": [0, 1, 0, 1], "coeff": 1}
    ]},
    "b_grid": {"b_min": 1, "b_max": 1, "points": 1},
    "density": {"p_max": 3, "n_max": 1, "eps": 0.001,
                "samples": 1000, "seed": 1}
}"#;

#[test]
fn count_single_bound_emits_known_row() {
    let s = Scratch::new("count1");
    let cfg = s.write("cfg.json", P1P1_B1);
    let out_dir = s.path("out");
    let out = run(&[
        "count",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("counts.csv")).unwrap();
    assert_eq!(csv, "B,count,raw_count,openset_id,cap_hit\n1,4,16,all,false\n");
}

#[test]
fn check_prints_diagnostics_and_succeeds() {
    let s = Scratch::new("check");
    let cfg = s.write("cfg.json", P1P1_B1);
    let out = run(&["check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("applies = false"), "{stdout}");
    assert!(stdout.contains("m_required"), "{stdout}");
    assert!(stdout.contains("failing: d1 >= 2"), "{stdout}");
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let out = run(&["frobnicate"]);
    assert_eq!(code(&out), 64);
}

#[test]
fn missing_config_flag_is_usage_error() {
    let out = run(&["count"]);
    assert_eq!(code(&out), 64);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
}

#[test]
fn config_errors_exit_2_with_error_line() {
    let s = Scratch::new("badcfg");
    let cfg = s.write("cfg.json", r#"{"n": 2}"#);
    let out = run(&["count", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    let first = err.lines().next().unwrap();
    assert!(first.starts_with("error: "), "{err}");
    assert!(first.contains("missing field"), "{err}");

    let out = run(&["count", "--config", s.path("nope.json").to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

/// Vanishes identically on z = 0 with β₁ = β₂, so the bounded-height count
/// is infinite without an |x|-cap.
const NEEDS_CAP: &str = r#"{
    "n": 3, "r": 1, "m": 2, "d1": 1, "d2": 1,
    "form": {"monomials": [
        {"exponents": [1, 0, 0, 1, 0], "coeff": 1},
        {"exponents": [0, 1, 0, 0, 1], "coeff": 1}
    ]},
    "b_grid": {"b_min": 4, "b_max": 4, "points": 1}
}"#;

#[test]
fn cap_exhaustion_exits_3_and_cap_flag_rescues() {
    let s = Scratch::new("cap");
    let cfg = s.write("cfg.json", NEEDS_CAP);
    let out_dir = s.path("out");
    let out = run(&[
        "count",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));

    let out = run(&[
        "count",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--cap-x",
        "10",
    ]);
    assert_eq!(code(&out), 0);
    let csv = fs::read_to_string(out_dir.join("counts.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with(",true"), "{csv}");
}

#[test]
fn out_dir_falls_back_to_env_var() {
    let s = Scratch::new("envout");
    let cfg = s.write("cfg.json", P1P1_B1);
    let out_dir = s.path("envdir");
    let out = Command::new(BIN)
        .args(["count", "--config", cfg.to_str().unwrap()])
        .env("MANIN_LAB_OUT", &out_dir)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(out_dir.join("counts.csv").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let s = Scratch::new("rerun");
    let cfg = s.write("cfg.json", P1P1_B1);
    let (a, b) = (s.path("a"), s.path("b"));
    for dir in [&a, &b] {
        let out = run(&[
            "report",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in [
        "counts.csv",
        "density_p.csv",
        "density_inf.csv",
        "constant.csv",
        "report.txt",
    ] {
        let fa = fs::read(a.join(name)).unwrap();
        let fb = fs::read(b.join(name)).unwrap();
        assert_eq!(fa, fb, "{name} differs between reruns");
    }
}

#[test]
fn seed_flag_overrides_sampling_seed() {
    let s = Scratch::new("seed");
    let cfg = s.write("cfg.json", P1P1_B1);
    let (a, b, c) = (s.path("a"), s.path("b"), s.path("c"));
    for (dir, seed) in [(&a, "7"), (&b, "7"), (&c, "8")] {
        let out = run(&[
            "density-inf",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let fa = fs::read_to_string(a.join("density_inf.csv")).unwrap();
    let fb = fs::read_to_string(b.join("density_inf.csv")).unwrap();
    let fc = fs::read_to_string(c.join("density_inf.csv")).unwrap();
    assert_eq!(fa, fb, "same seed must reproduce");
    assert!(fa.lines().nth(1).unwrap().ends_with(",7"), "{fa}");
    assert!(fc.lines().nth(1).unwrap().ends_with(",8"), "{fc}");
}

#[test]
fn every_subcommand_emits_its_csv() {
    let s = Scratch::new("all");
    let cfg = s.write("cfg.json", P1P1_B1);
    for (cmd, file) in [
        ("fan", "fan.csv"),
        ("monomials", "monomials.csv"),
        ("count", "counts.csv"),
        ("histogram", "histogram.csv"),
        ("density-p", "density_p.csv"),
        ("density-inf", "density_inf.csv"),
        ("hypersum", "hypersum.csv"),
        ("constant", "constant.csv"),
    ] {
        let out_dir = s.path(cmd);
        let out = run(&[
            cmd,
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(
            code(&out),
            0,
            "{cmd}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let body = fs::read_to_string(out_dir.join(file)).unwrap();
        let header = body.lines().next().unwrap();
        assert!(
            header.chars().all(|c| c.is_ascii_alphanumeric() || c == ',' || c == '_'),
            "{cmd}: header row expected, got {header}"
        );
        assert!(body.lines().count() >= 2, "{cmd}: no data rows");
    }
}
