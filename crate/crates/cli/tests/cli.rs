use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cmt_core::config::params_from_section;
use cmt_core::export;
use cmt_core::fitting::{synthetic_branches, FitFixed, FitParams};
use cmt_core::spectrum::spectrum;
use cmt_core::presets;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmt-lab"))
        .args(args)
        .output()
        .expect("spawn cmt-lab")
}

fn run_in(out: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    all.extend(["--out", out.to_str().unwrap()]);
    run(&all)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

fn value<'a>(report: &'a str, key: &str) -> &'a str {
    report
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(" = ")))
        .unwrap_or_else(|| panic!("no `{key}` in\n{report}"))
}

#[test]
fn classify_presets() {
    let tmp = TempDir::new().unwrap();
    let o = run_in(tmp.path(), &["classify", "--preset", "cit"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = read(tmp.path(), "classify.txt");
    assert_eq!(value(&r, "regime"), "LevelRepulsion");
    assert_eq!(value(&r, "touch_points"), "");

    let o = run_in(tmp.path(), &["classify", "--preset", "cia"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = read(tmp.path(), "classify.txt");
    assert_eq!(value(&r, "regime"), "LevelAttraction");
    assert_eq!(value(&r, "touch_points").split(", ").count(), 2);
    let crossings = read(tmp.path(), "crossings.csv");
    assert!(crossings.lines().count() > 1);
}

#[test]
fn outputs_are_deterministic() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for sub in ["spectrum", "dispersion", "eigen", "classify"] {
        assert_eq!(code(&run_in(a.path(), &[sub, "--preset", "cit"])), 0);
        assert_eq!(code(&run_in(b.path(), &[sub, "--preset", "cit", "--sequential"])), 0);
    }
    for name in ["spectrum.csv", "dispersion.csv", "eigen.csv", "classify.txt", "crossings.csv"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
    let strip = |s: String| {
        s.lines()
            .filter(|l| !l.starts_with("timestamp") && !l.starts_with("execution"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(read(a.path(), "manifest.txt")), strip(read(b.path(), "manifest.txt")));
    let leftovers = fs::read_dir(a.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with(".tmp"))
        .count();
    assert_eq!(leftovers, 0);
}

#[test]
fn spectrum_matches_library() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&run_in(tmp.path(), &["spectrum", "--preset", "cia", "--db"])), 0);
    let doc = presets::load("cia").unwrap();
    let p = params_from_section(doc.require("params").unwrap()).unwrap();
    let grid = doc.require("grid").unwrap().require_grid("drive").unwrap();
    let expected = export::spectrum_csv(&spectrum(&p, &grid).unwrap(), true).unwrap();
    assert_eq!(fs::read(tmp.path().join("spectrum.csv")).unwrap(), expected);
}

#[test]
fn config_overlays_preset() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("swap.conf");
    fs::write(&cfg, "[params]\nj = 0\nbig_gamma = 0.05\n").unwrap();
    let o = run_in(
        &tmp.path().join("out"),
        &["classify", "--preset", "cit", "--config", cfg.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(value(&read(&tmp.path().join("out"), "classify.txt"), "regime"), "LevelAttraction");
}

#[test]
fn config_errors_exit_two_with_line() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.conf");
    fs::write(&cfg, "[params]\nomega_a = 4.22\nomgea_b = 4.22\n").unwrap();
    let o = run_in(tmp.path(), &["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    fs::write(&cfg, "[params]\nomega_a = 4.22\nomega_b = 4.22\nalpha = -1\nbeta = 0.001\ngamma = 0.01\nkappa = 0.001\nj = 0\nbig_gamma = 0\n[grid]\ndrive = 4, 4.4, 11\n").unwrap();
    let o = run_in(tmp.path(), &["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));

    assert_eq!(code(&run_in(tmp.path(), &["spectrum"])), 2);
    assert_eq!(code(&run_in(tmp.path(), &["spectrum", "--preset", "nope"])), 2);
    assert_eq!(code(&run_in(tmp.path(), &["eigen", "--preset", "fig5-default"])), 2);
    assert_eq!(code(&run(&["bogus"])), 2);
}

#[test]
fn gain_has_no_steady_state() {
    let tmp = TempDir::new().unwrap();
    let o = run_in(tmp.path(), &["oracle-check", "--preset", "cia"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("no steady state"));
}

#[test]
fn oracle_check_agrees() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("o.conf");
    fs::write(&cfg, "[oracle]\ndrive = 4.1, 4.3, 3\ntrace = true\n").unwrap();
    let o = run_in(tmp.path(), &["oracle-check", "--preset", "cit", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let max: f64 = value(&read(tmp.path(), "manifest.txt"), "max_rel_err").parse().unwrap();
    assert!(max <= 1e-6, "{max}");
    assert!(read(tmp.path(), "trace.csv").lines().count() > 100);
}

#[test]
fn fit_exhausting_budget_exits_four() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("f.conf");
    fs::write(&cfg, "[fit]\nmax_iter = 5\n").unwrap();
    let o = run_in(tmp.path(), &["fit", "--preset", "cit", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert_eq!(value(&read(tmp.path(), "fit.txt"), "converged"), "false");
}

#[test]
fn fit_reads_branch_file_relative_to_config() {
    let tmp = TempDir::new().unwrap();
    let fixed = FitFixed {
        omega_a: 4.22,
        alpha_eff: 0.011,
        beta_eff: 0.002,
    };
    let truth = FitParams {
        j: 0.04,
        gamma_eff: 0.0,
        slope: 0.5,
        intercept: 3.97,
    };
    let controls: Vec<f64> = (0..25).map(|i| i as f64 / 24.0).collect();
    let data = synthetic_branches(&fixed, &truth, &controls).unwrap();
    let sub = tmp.path().join("cfg");
    fs::create_dir(&sub).unwrap();
    fs::write(sub.join("branches.csv"), export::branch_data_csv(&data).unwrap()).unwrap();
    fs::write(sub.join("fit.conf"), "[fit]\ndata = branches.csv\n").unwrap();
    let cfg = sub.join("fit.conf");
    let o = run_in(
        &tmp.path().join("out"),
        &["fit", "--preset", "cit", "--config", cfg.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = read(&tmp.path().join("out"), "fit.txt");
    let j: f64 = value(&r, "j_hat_GHz").parse().unwrap();
    assert!((j.abs() - 0.04).abs() < 1e-6, "{r}");
    assert_eq!(value(&r, "regime"), "coherent");
}

#[test]
fn geometry_writes_model_and_sweeps() {
    let tmp = TempDir::new().unwrap();
    let o = run_in(tmp.path(), &["geometry", "--preset", "elc"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["model.conf", "calibration.csv", "gap_sweep.csv", "size_sweep.csv"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
    // a stored model skips calibration and reproduces the sweeps
    let cfg = tmp.path().join("m.conf");
    fs::copy(tmp.path().join("model.conf"), &cfg).unwrap();
    let out = tmp.path().join("again");
    let o = run_in(&out, &["geometry", "sweep", "--preset", "elc", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(!out.join("calibration.csv").exists());
    for f in ["gap_sweep.csv", "size_sweep.csv", "model.conf"] {
        assert_eq!(read(tmp.path(), f), read(&out, f), "{f}");
    }
}

#[test]
fn phase_diagram_runs_on_default_axes() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("p.conf");
    fs::write(&cfg, "[phase]\nalpha_eff = 0, 0.1, 5\nbeta_eff = 0, 0.1, 5\nj = 0, 0.08, 5\n").unwrap();
    let o = run_in(tmp.path(), &["phase-diagram", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(read(tmp.path(), "phase_diagram.csv").lines().count(), 126);
    let m = read(tmp.path(), "manifest.txt");
    assert_eq!(value(&m, "cells"), "125");
}
