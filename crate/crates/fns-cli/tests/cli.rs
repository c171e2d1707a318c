//! End-to-end tests of the `fns` binary: exit-code taxonomy, artifact
//! layout, byte-level reproducibility, and the config override flags.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fns_cli::config::RunConfig;

fn fns(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fns"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Cheap but nontrivial solve: quadratic symbol at a small radius.
fn small_config(dir: &Path) -> String {
    let toml = format!(
        "eps = 1e-3\nradius = 6.0\nhorizon = 1.0\nsteps = 16\nout = {:?}\n",
        dir.join("run").to_str().unwrap()
    );
    let path = dir.join("config.toml");
    fs::write(&path, toml).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn print_default_config_round_trips_and_matches_the_builtin() {
    let out = fns(&["print-default-config"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let parsed: RunConfig = toml::from_str(&text).unwrap();
    assert_eq!(parsed, RunConfig::default());
}

#[test]
fn zero_symbol_solve_exits_clean_after_one_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        "radius = 4.0\nsteps = 8\nout = {:?}\n[symbol]\nkind = \"zero\"\n[data]\nkind = \"single_mode\"\n",
        dir.path().join("run").to_str().unwrap()
    );
    let path = dir.path().join("zero.toml");
    fs::write(&path, cfg).unwrap();
    let out = fns(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let manifest = fs::read_to_string(dir.path().join("run/manifest.toml")).unwrap();
    assert!(manifest.contains("format = \"fns-artifacts v1\""));
    assert!(manifest.contains("rng = \"chacha8\""));
    assert!(manifest.contains("iterations = 1"));
    assert!(dir.path().join("run/distances.csv").exists());
    assert!(dir.path().join("run/norms.csv").exists());
    assert!(dir.path().join("run/snapshots/node_0008.txt").exists());
}

#[test]
fn identical_runs_produce_bitwise_identical_numeric_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&fns(&["solve", "--config", &cfg, "--out", a.to_str().unwrap()])), 0);
    assert_eq!(code(&fns(&["solve", "--config", &cfg, "--out", b.to_str().unwrap()])), 0);

    for name in ["distances.csv", "norms.csv"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name} differs between identical runs"
        );
    }
    let snaps: Vec<_> = {
        let mut v: Vec<_> = fs::read_dir(a.join("snapshots"))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        v.sort();
        v
    };
    assert_eq!(snaps.len(), 17);
    for name in snaps {
        assert_eq!(
            fs::read(a.join("snapshots").join(&name)).unwrap(),
            fs::read(b.join("snapshots").join(&name)).unwrap(),
            "{name:?} differs between identical runs"
        );
    }
}

#[test]
fn seed_override_changes_the_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&fns(&["solve", "--config", &cfg, "--out", a.to_str().unwrap()])), 0);
    assert_eq!(
        code(&fns(&["solve", "--config", &cfg, "--out", b.to_str().unwrap(), "--seed", "7"])),
        0
    );
    assert_ne!(
        fs::read(a.join("snapshots/node_0000.txt")).unwrap(),
        fs::read(b.join("snapshots/node_0000.txt")).unwrap(),
        "different seeds produced identical data"
    );
    let manifest = fs::read_to_string(b.join("manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 7"), "manifest records the effective seed");
}

#[test]
fn malformed_config_exits_64_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let run = dir.path().join("run");
    fs::write(&path, format!("epz = 1e-3\nout = {:?}\n", run.to_str().unwrap())).unwrap();
    let out = fns(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 64);
    assert!(stderr(&out).contains("config"));
    assert!(!run.exists(), "rejected config must not leave artifacts");

    // same taxonomy for values that parse but make no sense
    fs::write(&path, "eps = -1.0\n").unwrap();
    assert_eq!(code(&fns(&["solve", "--config", path.to_str().unwrap()])), 64);
}

#[test]
fn missing_config_file_and_unknown_flags_exit_64() {
    let out = fns(&["solve", "--config", "/nonexistent/nowhere.toml"]);
    assert_eq!(code(&out), 64);
    let out = fns(&["solve", "--frobnicate"]);
    assert_eq!(code(&out), 64);
    let out = fns(&["no-such-subcommand"]);
    assert_eq!(code(&out), 64);
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&fns(&["--help"])), 0);
    assert_eq!(code(&fns(&["--version"])), 0);
}

#[test]
fn verify_without_artifacts_exits_64() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = fns(&["verify", "--config", &cfg]);
    assert_eq!(code(&out), 64);
    assert!(stderr(&out).contains("manifest"));
}

#[test]
fn solve_then_verify_then_bootstrap_pass_on_a_small_run() {
    let dir = tempfile::tempdir().unwrap();
    // a run sized so every stage of the decay ladder has nodes to check:
    // depth 1 needs k_1 inside radius 6 and rho inside the horizon
    let cfg_text = format!(
        "eps = 0.03\nradius = 6.0\nhorizon = 12.0\nsteps = 16\nout = {:?}\n\
         [symbol]\nkind = \"navier_stokes_leray\"\n\
         [data]\nkind = \"random_ball\"\nseed = 5\n\
         [schedule]\nrho = 9.0\nk_minus1 = 1e-5\ndepth = 1\n",
        dir.path().join("run").to_str().unwrap()
    );
    let path = dir.path().join("run.toml");
    fs::write(&path, cfg_text).unwrap();
    let cfg = path.to_str().unwrap();

    let out = fns(&["solve", "--config", cfg]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let out = fns(&["verify", "--config", cfg]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let diag = fs::read_to_string(dir.path().join("run/diagnostics.txt")).unwrap();
    assert!(diag.contains("check=solution/fixed-point-residual pass=1"));
    assert!(diag.contains("check=symmetry/divergence-increment pass=1"));
    // random-ball data carries divergence, so no full-state claim is made
    assert!(!diag.contains("check=symmetry/divergence-state"));

    let out = fns(&["bootstrap", "--config", cfg]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let boot = fs::read_to_string(dir.path().join("run/bootstrap.txt")).unwrap();
    assert!(boot.contains("check=bootstrap/terminal pass=1"));
    let fits = fs::read_to_string(dir.path().join("run/fits.csv")).unwrap();
    // nodes at t = 9, 9.75, 10.5, 11.25, 12 lie at or past rho
    assert_eq!(fits.lines().filter(|l| !l.starts_with('#')).count(), 6);
}

#[test]
fn divergence_free_data_keeps_its_divergence_free_states() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        "radius = 4.0\nsteps = 8\nout = {:?}\n\
         [symbol]\nkind = \"navier_stokes_leray\"\n[data]\nkind = \"single_mode\"\n",
        dir.path().join("run").to_str().unwrap()
    );
    let path = dir.path().join("tv.toml");
    fs::write(&path, cfg).unwrap();
    assert_eq!(code(&fns(&["solve", "--config", path.to_str().unwrap()])), 0);
    assert_eq!(code(&fns(&["verify", "--config", path.to_str().unwrap()])), 0);
    let diag = fs::read_to_string(dir.path().join("run/diagnostics.txt")).unwrap();
    assert!(diag.contains("check=symmetry/divergence-state pass=1"));
}

#[test]
fn bootstrap_depth_past_feasibility_exits_64_with_the_limit() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let base = format!(
        "eps = 0.03\nradius = 4.0\nhorizon = 12.0\nsteps = 16\nout = {:?}\n\
         [symbol]\nkind = \"zero\"\n[data]\nkind = \"deterministic_profile\"\n\
         [schedule]\nrho = 9.0\ndepth = DEPTH\n",
        run.to_str().unwrap()
    );
    let path = dir.path().join("boot.toml");

    fs::write(&path, base.replace("DEPTH", "1")).unwrap();
    assert_eq!(code(&fns(&["solve", "--config", path.to_str().unwrap()])), 0);
    assert_eq!(code(&fns(&["bootstrap", "--config", path.to_str().unwrap()])), 0);

    fs::write(&path, base.replace("DEPTH", "3")).unwrap();
    let out = fns(&["bootstrap", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 64);
    let msg = stderr(&out);
    assert!(
        msg.contains("max feasible depth here is 1"),
        "suggestion missing from: {msg}"
    );
}

#[test]
fn non_convergent_solve_exits_2_but_reports_fully() {
    let dir = tempfile::tempdir().unwrap();
    // one iteration cannot reach 1e-10 for a nonzero symbol
    let cfg = format!(
        "eps = 1e-3\nradius = 4.0\nsteps = 8\nmax_iter = 1\nout = {:?}\n",
        dir.path().join("run").to_str().unwrap()
    );
    let path = dir.path().join("stall.toml");
    fs::write(&path, cfg).unwrap();
    let out = fns(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let manifest = fs::read_to_string(dir.path().join("run/manifest.toml")).unwrap();
    assert!(manifest.contains("converged = false"));
    assert!(dir.path().join("run/snapshots/node_0008.txt").exists());
}

#[test]
fn bench_gates_on_equivalence_and_writes_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let out = fns(&["bench", "--out", run.to_str().unwrap(), "--radii", "4"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let csv = fs::read_to_string(run.join("bench.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "radius,modes,direct_seconds,fft_seconds,speedup");
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("4,"));
}
