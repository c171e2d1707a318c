//! The four workflows behind the subcommands. Each returns the process exit
//! code: 0 success, 2 solver non-convergence, 3 failed checks, 64 unusable
//! input (bad config, missing artifacts, infeasible ladder).
//!
//! Commands compute first and write artifacts only from finished results, so
//! a rejected configuration leaves no partial output behind.

use std::fs;
use std::io::Write;
use std::time::Instant;

use anyhow::{Context, Result};
use fns_core::checks::{equicontinuity_report, regularity_bootstrap_run, uniform_bound_report};
use fns_core::conv::{bilinear, ConvEngine};
use fns_core::data::make_small_data;
use fns_core::field::phi2_distance;
use fns_core::fit::fit_decay_exponent;
use fns_core::picard::{
    discretization_residual, fixed_point_residual, heat_propagate, picard_solve_with,
    restart_residual, truncation_tail_allowance, PicardOptions,
};
use fns_core::report::{all_pass, write_records, CheckRecord};
use fns_core::schedule::{bootstrap_schedule, max_feasible_depth, EPS_LIMIT};
use fns_core::{BilinearSymbol, SpectralField, SymbolKind, TimeGrid};

use crate::artifacts::{
    csv_data_rows, csv_preamble, load_manifest, load_trajectory, write_solve_artifacts,
};
use crate::config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO_CONVERGENCE: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

/// Hermitian/divergence defects are exact-cancellation properties; this is
/// the roundoff allowance on them.
const SYMMETRY_TOL: f64 = 1e-12;
/// The fixed-point defect of a converged solve sits at the iteration
/// tolerance times the contraction factor; allow this multiple.
const RESIDUAL_MULTIPLE: f64 = 10.0;
/// Engine agreement gate for the benchmark, relative to the oracle result.
const BENCH_EQUIV_TOL: f64 = 1e-12;
/// Iterate-to-iterate stability cap on the equicontinuity modulus.
const MODULUS_STABILITY: f64 = 1.05;

fn symbol_of(cfg: &RunConfig) -> BilinearSymbol {
    BilinearSymbol::with_bound_constant(cfg.symbol.kind, cfg.symbol.bound_constant)
}

pub fn run_solve(cfg: &RunConfig) -> Result<i32> {
    let psi = make_small_data(cfg.eps, cfg.radius, cfg.data.seed, cfg.data.kind);
    let sym = symbol_of(cfg);
    let grid = TimeGrid::new(cfg.horizon, cfg.steps);
    let opts = PicardOptions {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        engine: cfg.engine,
        record_iterates: false,
        bound_watch: None,
    };
    let out = picard_solve_with(&psi, &sym, grid, &opts);

    write_solve_artifacts(&cfg.out, cfg, &out.report, &out.trajectory)?;
    println!(
        "solve: converged={} iterations={} final_residual={:.3e} tail_allowance={:.3e} -> {}",
        out.report.converged,
        out.report.iterations,
        out.report.final_residual,
        out.report.tail_allowance,
        cfg.out.display(),
    );
    if out.report.converged {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "solve did not reach tol={:.1e} in {} iterations (last distances: {:?})",
            cfg.tol,
            out.report.iterations,
            out.report.distances.iter().rev().take(3).collect::<Vec<_>>(),
        );
        Ok(EXIT_NO_CONVERGENCE)
    }
}

/// Every estimate the stored run is supposed to satisfy, re-measured from
/// the snapshots. The manifest's embedded config is authoritative here; the
/// command-line config only locates the artifact directory.
pub fn run_verify(cfg: &RunConfig) -> Result<i32> {
    let manifest = match load_manifest(&cfg.out) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("verify: {e:#}");
            return Ok(EXIT_USAGE);
        }
    };
    let stored = &manifest.config;
    let traj = match load_trajectory(&cfg.out, stored) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("verify: {e:#}");
            return Ok(EXIT_USAGE);
        }
    };
    let sym = symbol_of(stored);
    let psi = make_small_data(stored.eps, stored.radius, stored.data.seed, stored.data.kind);
    let inputs = format!(
        "eps={:.3e} radius={} seed={} kind={} symbol={:?}",
        stored.eps,
        stored.radius,
        stored.data.seed,
        stored.data.kind.name(),
        stored.symbol.kind,
    );

    let mut records = Vec::new();

    // stored initial node must be the seeded data, bit for bit
    records.push(CheckRecord::le(
        "integrity/initial-state",
        "distance from snapshot 0 to the regenerated data (0 = bitwise)",
        inputs.clone(),
        phi2_distance(traj.state(0), &psi),
        0.0,
    ));
    records.push(CheckRecord::le(
        "integrity/distance-rows",
        "distances.csv rows against the manifest iteration count",
        inputs.clone(),
        (csv_data_rows(&cfg.out.join("distances.csv"))? as f64
            - manifest.result.iterations as f64)
            .abs(),
        0.0,
    ));
    let tail = truncation_tail_allowance(&traj, &sym);
    records.push(CheckRecord::le(
        "integrity/tail-allowance",
        "recomputed truncation allowance against the manifest value (0 = bitwise)",
        inputs.clone(),
        (tail.value - manifest.result.tail_allowance).abs(),
        0.0,
    ));

    records.push(CheckRecord::le(
        "solution/converged",
        "manifest reports the iteration reached its tolerance",
        inputs.clone(),
        if manifest.result.converged { 0.0 } else { 1.0 },
        0.0,
    ));
    let residual = fixed_point_residual(&traj, &sym, stored.engine);
    records.push(CheckRecord::le(
        "solution/fixed-point-residual",
        "defect of the stored trajectory in the discrete mild identity",
        inputs.clone(),
        residual,
        RESIDUAL_MULTIPLE * stored.tol,
    ));
    records.push(CheckRecord::le(
        "solution/restart-consistency",
        "restart at tau=0 reproduces the fixed-point defect exactly",
        inputs.clone(),
        (restart_residual(&traj, 0.0, &sym, stored.engine) - residual).abs(),
        0.0,
    ));

    // the solution inherits the iterate family's bound and modulus claims
    let family = [traj.clone()];
    records.extend(uniform_bound_report(&family, stored.eps).records());
    let eq = equicontinuity_report(&family);
    records.push(CheckRecord::le(
        "equicontinuity/stability",
        "max-over-median spread of the Lipschitz modulus across iterates",
        format!("{inputs} modulus_max={:.16e}", eq.max),
        eq.ratio,
        MODULUS_STABILITY,
    ));

    let worst_hermitian = traj
        .states()
        .iter()
        .map(SpectralField::hermitian_defect)
        .fold(0.0, f64::max);
    records.push(CheckRecord::le(
        "symmetry/hermitian",
        "worst conjugate-pairing defect over all nodes",
        inputs.clone(),
        worst_hermitian,
        SYMMETRY_TOL,
    ));
    if stored.symbol.kind == SymbolKind::NavierStokesLeray {
        // what the projector actually guarantees: the increment over the
        // heat baseline is divergence free no matter what the data does
        let grid = traj.grid();
        let mut worst_inc = 0.0f64;
        for j in 0..=grid.steps() {
            let base = heat_propagate(&psi, grid.node(j));
            for (xi, v) in traj.state(j).iter() {
                let b = base.get(xi);
                let [x, y, z] = xi.components();
                let dot = (v[0] - b[0]) * x as f64
                    + (v[1] - b[1]) * y as f64
                    + (v[2] - b[2]) * z as f64;
                worst_inc = worst_inc.max(dot.norm());
            }
        }
        records.push(CheckRecord::le(
            "symmetry/divergence-increment",
            "worst xi . (v - heat baseline) over all nodes; the nonlinearity is projected",
            inputs.clone(),
            worst_inc,
            SYMMETRY_TOL,
        ));
        // full states inherit the property only from divergence-free data
        if psi.divergence_defect() <= SYMMETRY_TOL {
            let worst_div = traj
                .states()
                .iter()
                .map(SpectralField::divergence_defect)
                .fold(0.0, f64::max);
            records.push(CheckRecord::le(
                "symmetry/divergence-state",
                "worst xi . v(xi) over all nodes (divergence-free data stays so)",
                inputs.clone(),
                worst_div,
                SYMMETRY_TOL,
            ));
        }
    }

    // quadratic-order defect: a gauge of time-discretization error, written
    // to the report header; the pass/fail checks above use the same linear
    // order as the solver so they measure the solver, not the grid
    let disc = discretization_residual(&traj, &sym, stored.engine);

    let mut w = std::io::BufWriter::new(fs::File::create(cfg.out.join("diagnostics.txt"))?);
    writeln!(w, "fns-diagnostics v1")?;
    writeln!(w, "code_version = {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(w, "discretization_residual = {disc:.16e}")?;
    write_records(&mut w, &records)?;
    let failed = records.iter().filter(|r| !r.pass).count();
    writeln!(w, "summary: {} checks, {} failed", records.len(), failed)?;
    w.flush()?;

    println!(
        "verify: {} checks, {} failed -> {}",
        records.len(),
        failed,
        cfg.out.join("diagnostics.txt").display()
    );
    for r in records.iter().filter(|r| !r.pass) {
        println!("  FAIL {}", r.line());
    }
    Ok(if all_pass(&records) { EXIT_OK } else { EXIT_CHECK_FAILED })
}

/// Runs the decay-ladder analysis against stored artifacts. Ladder knobs
/// (rho, k_minus1, depth, recurrence) come from the invoking config so depth
/// can be rescanned without re-solving; everything describing the stored run
/// itself (eps, radius, grid, symbol, engine) comes from the manifest.
pub fn run_bootstrap(cfg: &RunConfig) -> Result<i32> {
    let manifest = match load_manifest(&cfg.out) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("bootstrap: {e:#}");
            return Ok(EXIT_USAGE);
        }
    };
    let stored = &manifest.config;
    let traj = match load_trajectory(&cfg.out, stored) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("bootstrap: {e:#}");
            return Ok(EXIT_USAGE);
        }
    };

    let eps = stored.eps;
    if !(eps > 0.0 && eps < EPS_LIMIT) {
        eprintln!(
            "bootstrap: eps = {eps} is outside (0, {EPS_LIMIT:.6}); the induction's closure \
             constant needs 28 eps < 1"
        );
        return Ok(EXIT_USAGE);
    }
    let sched_cfg = &cfg.schedule;
    if sched_cfg.rho >= stored.horizon {
        eprintln!(
            "bootstrap: rho = {} must lie inside the computed horizon {}",
            sched_cfg.rho, stored.horizon
        );
        return Ok(EXIT_USAGE);
    }
    let d = traj.sup_phi2();
    if d == 0.0 {
        eprintln!("bootstrap: stored trajectory is identically zero; nothing to upgrade");
        return Ok(EXIT_USAGE);
    }

    // reject ladders whose cutoffs leave the truncation ball, and say how
    // deep this trajectory could go instead
    let feasible = match max_feasible_depth(eps, sched_cfg.rho, d, sched_cfg.k_minus1, traj.radius())
    {
        Ok(f) => f,
        Err(e) => {
            eprintln!("bootstrap: {e}");
            return Ok(EXIT_USAGE);
        }
    };
    match feasible {
        None => {
            eprintln!(
                "bootstrap: no feasible depth at radius {}: already the base cutoff leaves the \
                 ball; enlarge the radius or lower k_minus1",
                traj.radius()
            );
            return Ok(EXIT_USAGE);
        }
        Some(f) if sched_cfg.depth > f => {
            eprintln!(
                "bootstrap: depth {} is infeasible at radius {} (cutoff ladder leaves the ball); \
                 max feasible depth here is {f}",
                sched_cfg.depth,
                traj.radius()
            );
            return Ok(EXIT_USAGE);
        }
        Some(_) => {}
    }

    let schedule = bootstrap_schedule(
        eps,
        sched_cfg.rho,
        d,
        sched_cfg.k_minus1,
        sched_cfg.depth,
        sched_cfg.recurrence,
    )
    .expect("eps window checked above");
    let sym = symbol_of(stored);
    let run = match regularity_bootstrap_run(&traj, &schedule, &sym, stored.engine) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("bootstrap: {e}");
            return Ok(EXIT_USAGE);
        }
    };
    let records = run.records();

    let mut w = std::io::BufWriter::new(fs::File::create(cfg.out.join("bootstrap.txt"))?);
    writeln!(w, "fns-bootstrap v1")?;
    writeln!(w, "code_version = {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(w, "d_measured = {d:.16e}")?;
    writeln!(w, "cutoffs = {:?}", schedule.k)?;
    writeln!(w, "activation_times = {:?}", schedule.tau)?;
    writeln!(w, "exponents_mu = {:?}", schedule.mu)?;
    write_records(&mut w, &records)?;
    w.flush()?;

    // decay fits per node at and past rho, over shells [k_0, radius]
    let grid = traj.grid();
    let mut csv = csv_preamble();
    csv.push_str("t,exponent,prefactor,shells,residual\n");
    let mut fitted = 0usize;
    for j in 0..=grid.steps() {
        let t = grid.node(j);
        if t < sched_cfg.rho {
            continue;
        }
        match fit_decay_exponent(traj.state(j), schedule.k_0) {
            Ok(fit) => {
                fitted += 1;
                csv.push_str(&format!(
                    "{t:.16e},{:.16e},{:.16e},{},{:.16e}\n",
                    fit.exponent, fit.prefactor, fit.shells_used, fit.residual
                ));
            }
            Err(e) => eprintln!("bootstrap: no fit at t = {t}: {e}"),
        }
    }
    fs::write(cfg.out.join("fits.csv"), csv)?;

    for s in &run.stages {
        println!(
            "stage {}: cutoff {:.3e} sup {:.3e} bound {:.3e} pass={} chain={:?}",
            s.stage, s.cutoff, s.sup, s.bound, s.pass, s.chain_pass
        );
    }
    println!(
        "terminal: sup {:.3e} level {:.3e} pass={} fitted_nodes={fitted}",
        run.terminal.measured, schedule.d, run.terminal.pass
    );
    println!(
        "bootstrap: all_pass={} -> {}",
        run.all_pass,
        cfg.out.join("bootstrap.txt").display()
    );
    Ok(if run.all_pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

pub fn run_bench(cfg: &RunConfig, radii: &[f64]) -> Result<i32> {
    let sym = symbol_of(cfg);
    let mut rows = Vec::new();
    for &r in radii {
        if !(r >= 1.0 && r.is_finite()) {
            eprintln!("bench: radius {r} is not usable (need radius >= 1)");
            return Ok(EXIT_USAGE);
        }
        let u = make_small_data(cfg.eps, r, cfg.data.seed, cfg.data.kind);
        let v = make_small_data(cfg.eps, r, cfg.data.seed.wrapping_add(1), cfg.data.kind);

        let t0 = Instant::now();
        let direct = bilinear(ConvEngine::Direct, &u, &v, &sym)?;
        let t_direct = t0.elapsed().as_secs_f64();
        let t0 = Instant::now();
        let fast = bilinear(ConvEngine::Fft, &u, &v, &sym)?;
        let t_fft = t0.elapsed().as_secs_f64();

        // correctness precedes speed: a disagreeing pair aborts the report
        let gap = phi2_distance(&fast, &direct);
        let allowed = BENCH_EQUIV_TOL * (1.0 + direct.phi2_norm());
        if gap > allowed {
            eprintln!(
                "bench: engines disagree at radius {r}: phi2 gap {gap:.3e} > {allowed:.3e}; \
                 benchmark aborted"
            );
            return Ok(EXIT_CHECK_FAILED);
        }
        rows.push((r, u.len(), t_direct, t_fft));
    }

    fs::create_dir_all(&cfg.out)
        .with_context(|| format!("cannot create {}", cfg.out.display()))?;
    let mut csv = csv_preamble();
    csv.push_str("radius,modes,direct_seconds,fft_seconds,speedup\n");
    println!("radius    modes  direct[s]     fft[s]  speedup");
    for (r, modes, td, tf) in rows {
        csv.push_str(&format!("{r},{modes},{td:.6e},{tf:.6e},{:.3}\n", td / tf));
        println!("{r:>6} {modes:>8} {td:>10.4} {tf:>10.4} {:>7.1}x", td / tf);
    }
    fs::write(cfg.out.join("bench.csv"), csv)?;
    Ok(EXIT_OK)
}
