use std::path::{Path, PathBuf};
use std::process::Command;

use stasep::io::{manifest_path, RunManifest, Table};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stasep"))
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("stasep-cli-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn code(cmd: &mut Command) -> i32 {
    cmd.output().unwrap().status.code().unwrap()
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(bin().args(["distribution", "--which", "fgue", "--s-min", "3", "--s-max", "1"])), 2);
    assert_eq!(code(bin().args(["distribution", "--which", "fgue", "--s-step", "0"])), 2);
    assert_eq!(code(bin().args(["distribution", "--which", "nope"])), 2);
    assert_eq!(code(bin().args(["frobnicate"])), 2);
}

#[test]
fn model_errors_exit_three() {
    let d = scratch("model");
    let cfg = d.join("bad.toml");
    write(&cfg, "m = 4\nn = 4\nreplicas = 10\nmaster_seed = 1\n[model]\nkind = \"stationary-zeta\"\nrho = 1.5\n");
    assert_eq!(code(bin().args(["simulate", "--model", "lpp", "--config"]).arg(&cfg)), 3);
    let cfg = d.join("narrow.toml");
    write(&cfg, "rho = 0.5\nt_max = 50.0\nwindow_halfwidth = 20\nreplicas = 1000\nmaster_seed = 1\nobservation_sites = []\n");
    assert_eq!(code(bin().args(["simulate", "--model", "tasep", "--engine", "direct", "--config"]).arg(&cfg)), 3);
}

#[test]
fn fgue_both_methods_agree_and_leave_a_manifest() {
    let d = scratch("fgue");
    let out = d.join("fgue.csv");
    let st = bin().args(["distribution", "--which", "fgue", "--s-min", "-8", "--s-max", "6", "--s-step", "0.5", "--method", "both", "--out"]).arg(&out).output().unwrap().status;
    assert!(st.success());
    let t = Table::read(&out).unwrap();
    assert_eq!(t.columns, ["s", "fredholm", "painleve", "diff"]);
    assert!(t.column("diff").unwrap().iter().all(|d| d.abs() < 1e-6));
    let m = RunManifest::load(&manifest_path(&out)).unwrap();
    assert_eq!(m.outputs.len(), 3);
    assert!(m.stale_outputs().unwrap().is_empty());
    assert_eq!(m.config["which"], "fgue");
}

#[test]
fn simulations_are_reproducible() {
    let d = scratch("repro");
    let cfg = d.join("lpp.toml");
    write(&cfg, "m = 30\nn = 30\nreplicas = 600\nmaster_seed = 9\n[model]\nkind = \"stationary-zeta\"\nrho = 0.4\n");
    let digests = |tag: &str| {
        let out = d.join(format!("g-{tag}.csv"));
        assert!(bin().args(["simulate", "--model", "lpp", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap().status.success());
        let m = RunManifest::load(&manifest_path(&out)).unwrap();
        m.outputs.iter().map(|o| o.sha256.clone()).collect::<Vec<_>>()
    };
    assert_eq!(digests("a"), digests("b"));

    let cfg = d.join("tasep.toml");
    write(&cfg, "rho = 0.5\nt_max = 40.0\nwindow_halfwidth = 150\nreplicas = 1000\nmaster_seed = 5\nobservation_sites = []\n");
    let run = |tag: &str, threads: &str| {
        let out = d.join(format!("fw-{tag}.csv"));
        let st = bin().env("STASEP_THREADS", threads).args(["simulate", "--model", "tasep", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap().status;
        assert!(st.success());
        RunManifest::load(&manifest_path(&out)).unwrap().outputs.iter().map(|o| o.sha256.clone()).collect::<Vec<_>>()
    };
    assert_eq!(run("one", "1"), run("three", "3"));
}

#[test]
fn validate_reports_through_the_exit_code() {
    assert_eq!(code(bin().args(["validate", "--suite", "identities", "--budget", "fast"])), 0);
    // the edge-convergence exponents fall outside their window (errors decay like N^{-2/3})
    let out = bin().args(["validate", "--suite", "edge-convergence"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL  F error exponent"));
}
