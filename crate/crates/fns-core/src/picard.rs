//! The fixed-point iteration for the mild formulation.
//!
//! One iterate maps a trajectory v to
//!
//! ```text
//! (Phi v)(xi, t_j) = psi(xi) e^{-|xi|^2 t_j}
//!                  + integral_0^{t_j} e^{-|xi|^2 (t_j - s)} B(v, v)(xi, s) ds
//! ```
//!
//! with the integral evaluated by the kernel-exact quadrature of [`quad`](crate::quad)
//! on the forcing sampled at grid nodes. Iteration starts from the heat
//! trajectory (the solution of the linear part), and convergence is measured
//! in the sup over nodes of the weighted distance [`phi2_distance`].
//!
//! The same mild update, restarted from an interior node, measures how well
//! a finished trajectory satisfies the semigroup identity; with the restart
//! at zero that defect IS the fixed-point residual, so both diagnostics share
//! one code path and agree bitwise where the definitions coincide.

use rayon::prelude::*;
use std::collections::BTreeSet;
use thiserror::Error;

use crate::conv::{bilinear, ConvEngine};
use crate::field::{phi2_distance, Frequency, SpectralField, Vec3, ZERO_VEC3};
use crate::grid::{TimeGrid, Trajectory};
use crate::quad::{duhamel_core, QuadOrder};
use crate::sums::tail_sum_beyond;
use crate::symbol::BilinearSymbol;

#[derive(Debug, Error, PartialEq)]
pub enum PicardError {
    #[error("trajectory radius {traj} does not match data radius {psi}")]
    RadiusMismatch { traj: f64, psi: f64 },
}

/// Knobs for [`picard_solve_with`]. The plain [`picard_solve`] entry point
/// uses the FFT engine and records nothing extra.
#[derive(Clone, Copy, Debug)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub engine: ConvEngine,
    /// Keep every iterate (including v_0) for posthoc diagnostics.
    pub record_iterates: bool,
    /// Abort as soon as an iterate's sup-over-nodes phi2 norm exceeds this;
    /// the smallness-threshold experiments use it to detect escape cheaply.
    pub bound_watch: Option<f64>,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            tol: 1e-10,
            max_iter: 40,
            engine: ConvEngine::Fft,
            record_iterates: false,
            bound_watch: None,
        }
    }
}

/// What a solve measured about itself.
#[derive(Clone, Debug)]
pub struct PicardReport {
    /// Number of iterates actually computed (v_0 excluded).
    pub iterations: usize,
    /// d_n = sup over grid nodes of phi2_distance(v_n, v_{n-1}), n = 1...
    pub distances: Vec<f64>,
    /// d_{n*} <= tol was reached within max_iter.
    pub converged: bool,
    /// Defect of the discrete mild identity on the final trajectory, in the
    /// same weighted sup metric as `distances`. This is the quantity the
    /// iteration can actually drive to zero; the analytic allowance for what
    /// the lattice truncation dropped is orders of magnitude larger and is
    /// reported separately as `tail_allowance` so neither number hides the
    /// other.
    pub final_residual: f64,
    /// First-order bound on the forcing the truncation dropped, valid for
    /// modes inside `tail_coverage_radius`; see [`truncation_tail_allowance`].
    pub tail_allowance: f64,
    pub tail_coverage_radius: f64,
    /// Index of the first iterate whose sup phi2 norm exceeded
    /// `bound_watch`, counting v_0 as 0. `None` when never exceeded.
    pub bound_exceeded_at: Option<usize>,
}

/// A solve's trajectory plus report, with iterates kept when asked for.
#[derive(Clone, Debug)]
pub struct PicardOutcome {
    pub trajectory: Trajectory,
    pub report: PicardReport,
    /// v_0, v_1, ... (final included) when `record_iterates`, else empty.
    pub iterates: Vec<Trajectory>,
}

/// g(xi) = f(xi) exp(-|xi|^2 dt). A dt of zero is the bitwise identity.
pub fn heat_propagate(f: &SpectralField, dt: f64) -> SpectralField {
    assert!(dt >= 0.0, "heat propagation runs forward in time");
    if dt == 0.0 {
        return f.clone();
    }
    let mut out = SpectralField::new(f.radius());
    for (xi, v) in f.iter() {
        let k = (-(xi.norm_sq() as f64) * dt).exp();
        out.insert(xi, [v[0] * k, v[1] * k, v[2] * k]);
    }
    out
}

/// The linear-part solution: psi heat-propagated to every node, each node
/// computed in one step from psi so no error accumulates.
pub fn heat_trajectory(psi: &SpectralField, grid: &TimeGrid) -> Trajectory {
    let states = grid.nodes().map(|t| heat_propagate(psi, t)).collect();
    Trajectory::new(*grid, states)
}

/// Union support of the forcing snapshots, each mode with its full time
/// column, in lexicographic order.
fn forcing_columns(forcing: &[SpectralField]) -> Vec<(Frequency, Vec<Vec3>)> {
    let mut support: BTreeSet<Frequency> = BTreeSet::new();
    for g in forcing {
        for (xi, _) in g.iter() {
            support.insert(xi);
        }
    }
    support
        .into_iter()
        .map(|xi| (xi, forcing.iter().map(|g| g.get(xi)).collect()))
        .collect()
}

/// Shared mild update: heat-propagate `base` by each offset and add the
/// Duhamel integral of the forcing samples. `offsets[k]` is the time from
/// the base node to relative node k (so offsets[0] = 0) and `h` the substep;
/// forcing[k] is sampled at relative node k. Per-mode columns are
/// independent and run in parallel; assembly is sequential in lex order, so
/// results are deterministic.
fn mild_states(
    base: &SpectralField,
    offsets: &[f64],
    forcing: &[SpectralField],
    h: f64,
    order: QuadOrder,
) -> Vec<SpectralField> {
    debug_assert_eq!(offsets.len(), forcing.len());
    let contribs: Vec<(Frequency, Vec<Vec3>)> = forcing_columns(forcing)
        .into_par_iter()
        .map(|(xi, samples)| {
            let a = xi.norm_sq() as f64;
            let col = (0..samples.len())
                .map(|j| duhamel_core(a, &samples, h, j, order))
                .collect();
            (xi, col)
        })
        .collect();

    let mut states: Vec<SpectralField> =
        offsets.iter().map(|&dt| heat_propagate(base, dt)).collect();
    for (xi, col) in &contribs {
        for (state, add) in states.iter_mut().zip(col) {
            if *add != ZERO_VEC3 {
                let cur = state.get(*xi);
                state.insert(*xi, [cur[0] + add[0], cur[1] + add[1], cur[2] + add[2]]);
            }
        }
    }
    states
}

/// One application of the mild-solution map to `current`.
pub fn picard_iterate(
    current: &Trajectory,
    psi: &SpectralField,
    sym: &BilinearSymbol,
    engine: ConvEngine,
) -> Result<Trajectory, PicardError> {
    if current.radius() != psi.radius() {
        return Err(PicardError::RadiusMismatch {
            traj: current.radius(),
            psi: psi.radius(),
        });
    }
    let grid = *current.grid();
    let forcing: Vec<SpectralField> = current
        .states()
        .iter()
        .map(|s| bilinear(engine, s, s, sym).expect("states of one trajectory share a radius"))
        .collect();
    let offsets: Vec<f64> = grid.nodes().collect();
    let states = mild_states(psi, &offsets, &forcing, grid.dt(), QuadOrder::Linear);
    Ok(Trajectory::new(grid, states))
}

/// sup over nodes of the weighted field distance; the metric every
/// convergence statement here is phrased in.
pub fn trajectory_distance(a: &Trajectory, b: &Trajectory) -> f64 {
    assert_eq!(a.grid(), b.grid(), "distances need a common grid");
    a.states()
        .iter()
        .zip(b.states())
        .map(|(x, y)| phi2_distance(x, y))
        .fold(0.0, f64::max)
}

/// Iterates the mild map from the heat trajectory until the distance between
/// consecutive iterates drops to `tol` or `max_iter` is spent. Runs on the
/// FFT engine; see [`picard_solve_with`] for the instrumented version.
/// Non-convergence is reported in the result, not an error: where the
/// iteration stops contracting is exactly the data the threshold experiments
/// are after.
pub fn picard_solve(
    psi: &SpectralField,
    sym: &BilinearSymbol,
    grid: TimeGrid,
    tol: f64,
    max_iter: usize,
) -> (Trajectory, PicardReport) {
    let opts = PicardOptions {
        tol,
        max_iter,
        ..PicardOptions::default()
    };
    let outcome = picard_solve_with(psi, sym, grid, &opts);
    (outcome.trajectory, outcome.report)
}

pub fn picard_solve_with(
    psi: &SpectralField,
    sym: &BilinearSymbol,
    grid: TimeGrid,
    opts: &PicardOptions,
) -> PicardOutcome {
    assert!(opts.tol > 0.0, "tolerance must be positive");

    let mut v = heat_trajectory(psi, &grid);
    let mut iterates = Vec::new();
    if opts.record_iterates {
        iterates.push(v.clone());
    }

    let mut distances = Vec::new();
    let mut converged = false;
    let mut bound_exceeded_at = None;
    if let Some(watch) = opts.bound_watch {
        if v.sup_phi2() > watch {
            bound_exceeded_at = Some(0);
        }
    }

    let mut iterations = 0;
    while iterations < opts.max_iter && bound_exceeded_at.is_none() {
        let next = picard_iterate(&v, psi, sym, opts.engine)
            .expect("solver builds iterates on psi's own ball");
        let d = trajectory_distance(&next, &v);
        distances.push(d);
        iterations += 1;
        v = next;
        if opts.record_iterates {
            iterates.push(v.clone());
        }
        if let Some(watch) = opts.bound_watch {
            if v.sup_phi2() > watch {
                bound_exceeded_at = Some(iterations);
                break;
            }
        }
        if d <= opts.tol {
            converged = true;
            break;
        }
    }

    let final_residual = fixed_point_residual(&v, sym, opts.engine);
    let tail = truncation_tail_allowance(&v, sym);
    PicardOutcome {
        report: PicardReport {
            iterations,
            distances,
            converged,
            final_residual,
            tail_allowance: tail.value,
            tail_coverage_radius: tail.coverage_radius,
            bound_exceeded_at,
        },
        trajectory: v,
        iterates,
    }
}

fn restart_states_with_order(
    traj: &Trajectory,
    start: usize,
    sym: &BilinearSymbol,
    engine: ConvEngine,
    order: QuadOrder,
) -> Vec<SpectralField> {
    let grid = traj.grid();
    let forcing: Vec<SpectralField> = traj.states()[start..]
        .iter()
        .map(|s| bilinear(engine, s, s, sym).expect("states of one trajectory share a radius"))
        .collect();
    let offsets: Vec<f64> = (start..=grid.steps())
        .map(|j| grid.node(j) - grid.node(start))
        .collect();
    mild_states(traj.state(start), &offsets, &forcing, grid.dt(), order)
}

/// What the mild identity, restarted at node `start`, predicts for every
/// node from `start` on: entry k is the prediction for node start + k
/// (entry 0 reproduces the stored state). The decay induction checks its
/// stage bounds on these predictions, not just on the stored states, so the
/// restart mechanism itself is exercised.
pub fn restart_predictions(
    traj: &Trajectory,
    start: usize,
    sym: &BilinearSymbol,
    engine: ConvEngine,
) -> Vec<SpectralField> {
    restart_states_with_order(traj, start, sym, engine, QuadOrder::Linear)
}

/// Defect of the mild identity restarted at relative node `start`: rebuild
/// every later node from state(start) plus the Duhamel integral of the
/// trajectory's own forcing, and take the worst weighted distance to the
/// stored states.
fn restart_defect(
    traj: &Trajectory,
    start: usize,
    sym: &BilinearSymbol,
    engine: ConvEngine,
    order: QuadOrder,
) -> f64 {
    let predicted = restart_states_with_order(traj, start, sym, engine, order);
    let mut worst = 0.0f64;
    // Nodes strictly after the restart; the restart node matches trivially.
    for (k, pred) in predicted.iter().enumerate().skip(1) {
        worst = worst.max(phi2_distance(traj.state(start + k), pred));
    }
    worst
}

/// Semigroup-consistency defect of a finished trajectory, restarted at the
/// grid node `tau` (a non-node `tau` is a caller bug). At `tau = 0` this is
/// by definition the fixed-point residual.
pub fn restart_residual(traj: &Trajectory, tau: f64, sym: &BilinearSymbol, engine: ConvEngine) -> f64 {
    let start = traj
        .grid()
        .node_index(tau)
        .expect("restart time must be a grid node");
    restart_defect(traj, start, sym, engine, QuadOrder::Linear)
}

/// Defect of the discrete mild identity on the whole trajectory; what
/// [`PicardReport::final_residual`] reports.
pub fn fixed_point_residual(traj: &Trajectory, sym: &BilinearSymbol, engine: ConvEngine) -> f64 {
    restart_defect(traj, 0, sym, engine, QuadOrder::Linear)
}

/// Fixed-point defect measured against the quadratically-refined quadrature
/// instead of the one the iteration itself uses. On a converged trajectory
/// the plain residual is tolerance-level by construction; this one isolates
/// the time-discretization error, and halving the step must cut it by about
/// four.
pub fn discretization_residual(traj: &Trajectory, sym: &BilinearSymbol, engine: ConvEngine) -> f64 {
    restart_defect(traj, 0, sym, engine, QuadOrder::Quadratic)
}

/// A-priori allowance for the forcing the ball truncation dropped.
#[derive(Clone, Copy, Debug)]
pub struct TailAllowance {
    /// Bound, in phi2 units, on the dropped forcing at any covered mode.
    pub value: f64,
    /// Modes with |xi| up to this are covered by the bound.
    pub coverage_radius: f64,
}

/// Bounds the bilinear terms lost to the truncation at radius R, for output
/// modes with |xi| <= R/2.
///
/// With every component of the solution bounded by D/|q|^2 (D the measured
/// sup-over-nodes phi2 norm), a dropped pair has |q| > R on one side, hence
/// |xi - q| >= |q|/2 on the other, and the 3x3 component sum gives
///
/// ```text
/// |dropped(xi)| <= c |xi| * 9 * 2 * sum_{|q|>R} D^2 * 4 / |q|^4
///               <= 72 c (R/2) D^2 S_4(R),
/// ```
///
/// c the symbol's growth constant. The induced solution error then carries
/// at most this much phi2 mass, to first order in the tail. The zero symbol
/// drops nothing.
pub fn truncation_tail_allowance(traj: &Trajectory, sym: &BilinearSymbol) -> TailAllowance {
    let r = traj.radius();
    let coverage_radius = r / 2.0;
    if sym.is_zero() {
        return TailAllowance {
            value: 0.0,
            coverage_radius,
        };
    }
    let d = traj.sup_phi2();
    let s4 = tail_sum_beyond(r, 4.0)
        .expect("p = 4 tail converges")
        .value;
    TailAllowance {
        value: 72.0 * sym.bound_constant * coverage_radius * d * d * s4,
        coverage_radius,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_small_data, DataKind};
    use crate::symbol::SymbolKind;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn heat_dt_zero_is_the_identity() {
        let f = make_small_data(0.1, 4.0, 5, DataKind::RandomBall);
        assert_eq!(heat_propagate(&f, 0.0), f);
    }

    #[test]
    #[should_panic(expected = "forward in time")]
    fn heat_rejects_negative_dt() {
        let f = SpectralField::new(2.0);
        heat_propagate(&f, -0.1);
    }

    #[test]
    fn heat_single_mode_quarter_second() {
        // |xi|^2 dt = 4 * 0.25 = 1: the coefficient decays by exactly e^-1.
        let mut f = SpectralField::new(4.0);
        let xi = Frequency::xyz(2, 0, 0);
        f.insert(xi, [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let g = heat_propagate(&f, 0.25);
        assert!((g.get(xi)[0].re - (-1.0f64).exp()).abs() < 1e-16);
        assert_eq!(g.get(xi)[0].im, 0.0);
    }

    #[test]
    fn heat_contracts_the_phi2_norm() {
        let f = make_small_data(0.2, 5.0, 0, DataKind::DeterministicProfile);
        let mut prev = f.phi2_norm();
        for dt in [0.01, 0.1, 1.0] {
            let g = heat_propagate(&f, dt);
            let n = g.phi2_norm();
            assert!(n <= prev);
            prev = n;
        }
    }

    #[test]
    fn heat_trajectory_starts_at_psi() {
        let psi = make_small_data(0.05, 3.0, 2, DataKind::RandomBall);
        let grid = TimeGrid::new(1.0, 8);
        let traj = heat_trajectory(&psi, &grid);
        assert_eq!(*traj.state(0), psi);
        assert!(traj.sup_phi2() <= psi.phi2_norm());
    }

    #[test]
    fn zero_symbol_iterate_is_the_heat_trajectory_regardless_of_current() {
        let psi = make_small_data(0.05, 4.0, 3, DataKind::RandomBall);
        let other = make_small_data(0.4, 4.0, 9, DataKind::RandomBall);
        let grid = TimeGrid::new(0.5, 6);
        let current = heat_trajectory(&other, &grid);
        let sym = BilinearSymbol::new(SymbolKind::Zero);
        let next = picard_iterate(&current, &psi, &sym, ConvEngine::Direct).unwrap();
        assert_eq!(next, heat_trajectory(&psi, &grid));
    }

    #[test]
    fn radius_mismatch_is_an_error() {
        let psi = make_small_data(0.05, 4.0, 3, DataKind::RandomBall);
        let current = heat_trajectory(
            &make_small_data(0.05, 6.0, 3, DataKind::RandomBall),
            &TimeGrid::new(1.0, 4),
        );
        let sym = BilinearSymbol::new(SymbolKind::WorstCaseScalar);
        assert_eq!(
            picard_iterate(&current, &psi, &sym, ConvEngine::Direct),
            Err(PicardError::RadiusMismatch { traj: 6.0, psi: 4.0 })
        );
    }

    #[test]
    fn single_mode_iterate_matches_the_hand_integral() {
        // psi concentrated at xi0 = (1,0,0), first component w. Under the
        // diagonal worst-case symbol the only forced output of v_0 is at
        // 2 xi0, first component 2 w^2 e^{-2s}, so
        //   v_1(2 xi0, t) = int_0^t e^{-4(t-s)} 2 w^2 e^{-2s} ds
        //                 = w^2 (e^{-2t} - e^{-4t}).
        let w = 0.1;
        let mut psi = SpectralField::new(4.0);
        let xi0 = Frequency::xyz(1, 0, 0);
        psi.insert(xi0, [c(w, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let grid = TimeGrid::new(1.0, 64);
        let sym = BilinearSymbol::new(SymbolKind::WorstCaseScalar);
        let v0 = heat_trajectory(&psi, &grid);
        let v1 = picard_iterate(&v0, &psi, &sym, ConvEngine::Direct).unwrap();

        let xi2 = Frequency::xyz(2, 0, 0);
        for (j, t) in grid.nodes().enumerate() {
            let got = v1.state(j).get(xi2);
            let want = w * w * ((-2.0 * t).exp() - (-4.0 * t).exp());
            // Quadrature error only: O(h^2) against the smooth forcing.
            assert!((got[0].re - want).abs() < 5e-7, "node {j}");
            assert_eq!(got[1], Complex64::ZERO);
            assert_eq!(got[2], Complex64::ZERO);
            // The original mode carries no forcing (its only pair would
            // need the excluded zero mode), so it stays pure heat.
            assert_eq!(v1.state(j).get(xi0), v0.state(j).get(xi0));
        }
    }

    #[test]
    fn zero_symbol_solve_converges_in_one_clean_iteration() {
        let psi = make_small_data(0.05, 4.0, 7, DataKind::RandomBall);
        let grid = TimeGrid::new(1.0, 16);
        let sym = BilinearSymbol::new(SymbolKind::Zero);
        let (traj, report) = picard_solve(&psi, &sym, grid, 1e-12, 10);
        assert_eq!(traj, heat_trajectory(&psi, &grid));
        assert_eq!(report.iterations, 1);
        assert_eq!(report.distances, vec![0.0]);
        assert!(report.converged);
        assert_eq!(report.final_residual, 0.0);
        assert_eq!(report.tail_allowance, 0.0);
        assert_eq!(report.bound_exceeded_at, None);
    }

    #[test]
    fn zero_data_gives_the_zero_solution() {
        let psi = SpectralField::new(3.0);
        let grid = TimeGrid::new(0.5, 8);
        let sym = BilinearSymbol::new(SymbolKind::NavierStokesLeray);
        let (traj, report) = picard_solve(&psi, &sym, grid, 1e-12, 10);
        assert!(traj.states().iter().all(|s| s.is_empty()));
        assert!(report.converged);
        assert_eq!(report.final_residual, 0.0);
    }

    #[test]
    fn heat_only_restart_residual_vanishes_to_roundoff() {
        let psi = make_small_data(0.1, 4.0, 1, DataKind::RandomBall);
        let grid = TimeGrid::new(2.0, 16);
        let sym = BilinearSymbol::new(SymbolKind::Zero);
        let traj = heat_trajectory(&psi, &grid);
        for tau in [0.0, grid.node(5), grid.node(16)] {
            let r = restart_residual(&traj, tau, &sym, ConvEngine::Direct);
            // Semigroup property of the exact kernel; only exp roundoff,
            // weighted by |xi|^2 <= 16, survives.
            assert!(r <= 1e-13, "tau = {tau}: {r}");
        }
    }

    #[test]
    fn small_data_solve_contracts_and_respects_the_bound() {
        let eps = 1e-3;
        let psi = make_small_data(eps, 4.0, 1, DataKind::RandomBall);
        let grid = TimeGrid::new(1.0, 16);
        let sym = BilinearSymbol::new(SymbolKind::WorstCaseScalar);
        let opts = PicardOptions {
            tol: 1e-10,
            max_iter: 30,
            engine: ConvEngine::Direct,
            record_iterates: true,
            bound_watch: None,
        };
        let out = picard_solve_with(&psi, &sym, grid, &opts);
        let report = &out.report;
        assert!(report.converged, "distances: {:?}", report.distances);

        // Geometric contraction from the first step on.
        for pair in report.distances.windows(2) {
            assert!(pair[1] <= 0.5 * pair[0], "ratio: {:?}", report.distances);
        }
        // Every iterate stays inside the ball that seeded it.
        for it in &out.iterates {
            assert!(it.sup_phi2() <= eps);
        }
        assert!(report.final_residual <= 10.0 * opts.tol);

        // Restart at zero is the same computation as the final residual.
        let r0 = restart_residual(&out.trajectory, 0.0, &sym, ConvEngine::Direct);
        assert_eq!(r0, report.final_residual);
        // Interior restarts of a converged solve stay at tolerance level.
        let rh = restart_residual(&out.trajectory, 0.5, &sym, ConvEngine::Direct);
        assert!(rh <= 10.0 * opts.tol, "restart defect {rh}");
    }

    #[test]
    fn bound_watch_trips_on_oversized_data() {
        let eps = 50.0;
        let psi = make_small_data(eps, 2.0, 3, DataKind::RandomBall);
        let grid = TimeGrid::new(1.0, 8);
        let sym = BilinearSymbol::new(SymbolKind::WorstCaseScalar);
        let opts = PicardOptions {
            tol: 1e-10,
            max_iter: 6,
            engine: ConvEngine::Direct,
            record_iterates: false,
            bound_watch: Some(10.0 * eps),
        };
        let out = picard_solve_with(&psi, &sym, grid, &opts);
        assert!(out.report.bound_exceeded_at.is_some());
        assert!(!out.report.converged);
    }

    #[test]
    fn leray_iterates_stay_hermitian_and_divergence_free() {
        let psi = make_small_data(0.05, 4.0, 0, DataKind::SingleMode);
        assert_eq!(psi.divergence_defect(), 0.0);
        let grid = TimeGrid::new(0.5, 12);
        let sym = BilinearSymbol::new(SymbolKind::NavierStokesLeray);
        let opts = PicardOptions {
            tol: 1e-14,
            max_iter: 3,
            engine: ConvEngine::Fft,
            record_iterates: true,
            bound_watch: None,
        };
        let out = picard_solve_with(&psi, &sym, grid, &opts);
        for it in &out.iterates {
            for s in it.states() {
                assert!(s.hermitian_defect() <= 1e-13);
                assert!(s.divergence_defect() <= 1e-13);
            }
        }
    }

    #[test]
    fn halving_the_step_shrinks_the_discretization_residual() {
        let psi = make_small_data(0.05, 4.0, 0, DataKind::SingleMode);
        let sym = BilinearSymbol::new(SymbolKind::WorstCaseScalar);
        let residual_at = |steps: usize| {
            let grid = TimeGrid::new(1.0, steps);
            let (traj, report) = picard_solve(&psi, &sym, grid, 1e-12, 30);
            assert!(report.converged);
            discretization_residual(&traj, &sym, ConvEngine::Fft)
        };
        let coarse = residual_at(12);
        let fine = residual_at(24);
        assert!(coarse > 0.0);
        assert!(
            coarse / fine >= 3.5,
            "expected second-order decay: {coarse} vs {fine}"
        );
    }
}
