//! The verification layer: everything here consumes finished trajectories and
//! produces pass/fail evidence instead of new dynamics.
//!
//! Four families of checks live in this module. Uniform bounds confirm that
//! every Picard iterate stays inside the eps/|xi|^2 envelope the contraction
//! argument promises. Equicontinuity turns adjacent-node difference quotients
//! into a modulus and flags a family whose worst member strays from the
//! median. Shell decay compares one field against bound/|xi|^2 beyond a
//! cutoff, absent modes included, and reports the minimum margin. The
//! bootstrap run strings shell checks along a cutoff ladder, re-derives each
//! later stage from a restarted mild identity, and ends with the quarter-power
//! terminal estimate plus a log-log fit as independent corroboration.
//!
//! Failures are data, not errors: every checker returns its report and lets
//! the caller decide what a red entry means. The one hard error is a schedule
//! whose ladder leaves the truncation ball, which no amount of checking could
//! make meaningful.

use crate::conv::ConvEngine;
use crate::field::{vec3_sup, Frequency, SpectralField, Vec3};
use crate::fit::{fit_decay_exponent, DecayFit};
use crate::grid::{TimeGrid, Trajectory};
use crate::picard::restart_predictions;
use crate::report::CheckRecord;
use crate::schedule::{max_feasible_depth, BootstrapSchedule};
use crate::sums::{closed_ball_sq, for_each_mode_in_shell_sq};
use crate::symbol::BilinearSymbol;
use thiserror::Error;

/// Decay rate of the terminal estimate: |v| <= D / |xi|^(2 + 1/4) past the
/// target time.
pub const TERMINAL_EXPONENT: f64 = 2.25;

/// Slack allowed to the fitted exponent below the analytic terminal rate.
/// A log-log fit over desk-scale shells sees lattice anisotropy at this size.
pub const FIT_SLACK: f64 = 0.15;

/// Where a weighted sup was attained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundSite {
    pub iterate: usize,
    pub node: usize,
    pub xi: Frequency,
}

/// Outcome of checking |v(xi, t)| <= eps / |xi|^2 across a family of
/// trajectories. `worst_margin` is eps minus the largest weighted value seen;
/// negative means the envelope was breached at `worst_site`.
#[derive(Clone, Debug)]
pub struct UniformBoundReport {
    pub eps: f64,
    pub pass: bool,
    pub worst_margin: f64,
    /// Site of the largest |xi|^2 |v|, present whenever any mode is stored.
    pub worst_site: Option<BoundSite>,
    /// sup over nodes and modes of |xi|^2 |v|, one entry per trajectory.
    pub per_iterate_sup: Vec<f64>,
}

impl UniformBoundReport {
    /// One summary record plus one record per iterate.
    pub fn records(&self) -> Vec<CheckRecord> {
        let site = match &self.worst_site {
            Some(s) => format!("iterate={} node={} xi={}", s.iterate, s.node, s.xi),
            None => "empty".to_string(),
        };
        let global = self.per_iterate_sup.iter().cloned().fold(0.0, f64::max);
        let mut out = vec![CheckRecord::le(
            "uniform-bound",
            "every iterate stays inside eps/|xi|^2 at every node",
            format!(
                "eps={:.6e} iterates={} worst_site=[{}]",
                self.eps,
                self.per_iterate_sup.len(),
                site
            ),
            global,
            self.eps,
        )];
        for (n, sup) in self.per_iterate_sup.iter().enumerate() {
            out.push(CheckRecord::le(
                format!("uniform-bound/iterate-{n}"),
                "per-iterate sup of |xi|^2 |v|",
                format!("eps={:.6e} iterate={n}", self.eps),
                *sup,
                self.eps,
            ));
        }
        out
    }
}

/// Checks the eps/|xi|^2 envelope over every trajectory, node and stored
/// mode. Violations land in the report, never in a panic. An empty family
/// passes vacuously.
pub fn uniform_bound_report(iterates: &[Trajectory], eps: f64) -> UniformBoundReport {
    assert!(eps > 0.0, "envelope size must be positive");
    let mut per_iterate_sup = Vec::with_capacity(iterates.len());
    let mut best = 0.0f64;
    let mut site = None;
    for (n, traj) in iterates.iter().enumerate() {
        let mut iterate_sup = 0.0f64;
        for j in 0..traj.grid().num_nodes() {
            for (xi, v) in traj.state(j).iter() {
                let val = xi.norm_sq() as f64 * vec3_sup(v);
                iterate_sup = iterate_sup.max(val);
                if val > best {
                    best = val;
                    site = Some(BoundSite {
                        iterate: n,
                        node: j,
                        xi,
                    });
                }
            }
        }
        per_iterate_sup.push(iterate_sup);
    }
    UniformBoundReport {
        eps,
        pass: best <= eps,
        worst_margin: eps - best,
        worst_site: site,
        per_iterate_sup,
    }
}

fn vec3_diff_sup(a: Vec3, b: Vec3) -> f64 {
    let mut m = 0.0f64;
    for k in 0..3 {
        m = m.max((a[k] - b[k]).norm());
    }
    m
}

/// Largest |v(t_{j+1}) - v(t_j)| / (t_{j+1} - t_j) over adjacent nodes and
/// the union of their supports, unweighted by |xi|^2.
fn trajectory_modulus(traj: &Trajectory) -> f64 {
    let grid = traj.grid();
    assert!(grid.num_nodes() >= 2, "difference quotients need two nodes");
    let mut best = 0.0f64;
    for j in 0..grid.num_nodes() - 1 {
        let dt = grid.node(j + 1) - grid.node(j);
        let a = traj.state(j);
        let b = traj.state(j + 1);
        let mut diff = 0.0f64;
        // Two passes over the union; modes present in both are visited twice
        // with the same value, which cannot move a max.
        for (xi, vb) in b.iter() {
            diff = diff.max(vec3_diff_sup(*vb, a.get(xi)));
        }
        for (xi, va) in a.iter() {
            diff = diff.max(vec3_diff_sup(b.get(xi), *va));
        }
        best = best.max(diff / dt);
    }
    best
}

/// Worst time-difference quotient across the whole family. For a heat flow
/// this is bounded by sup |xi|^2 |psi(xi)|, so a family of honest iterates at
/// small data stays uniformly tame.
pub fn equicontinuity_modulus(iterates: &[Trajectory]) -> f64 {
    assert!(!iterates.is_empty(), "modulus of an empty family");
    iterates.iter().map(trajectory_modulus).fold(0.0, f64::max)
}

/// Spread of the per-iterate moduli. `stable` asks the worst member to sit
/// within five percent of the median, the equicontinuity signature of a
/// family produced by one contraction.
#[derive(Clone, Debug)]
pub struct EquicontinuityReport {
    pub per_iterate: Vec<f64>,
    pub max: f64,
    pub median: f64,
    /// max / median; 1 for an all-zero family, infinite when only the median
    /// degenerates.
    pub ratio: f64,
    pub stable: bool,
}

pub fn equicontinuity_report(iterates: &[Trajectory]) -> EquicontinuityReport {
    assert!(!iterates.is_empty(), "modulus of an empty family");
    let per_iterate: Vec<f64> = iterates.iter().map(trajectory_modulus).collect();
    let max = per_iterate.iter().cloned().fold(0.0, f64::max);
    let mut sorted = per_iterate.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let ratio = if max == 0.0 {
        1.0
    } else if median == 0.0 {
        f64::INFINITY
    } else {
        max / median
    };
    EquicontinuityReport {
        per_iterate,
        max,
        median,
        ratio,
        stable: ratio <= 1.05,
    }
}

/// Minimum of bound / |xi|^(2 nsq_power) - |f(xi)| over the closed ball
/// modes with |xi| >= k, absent modes counting as zero. Empty ranges pass
/// with infinite margin.
fn power_decay_check(f: &SpectralField, k: f64, bound: f64, nsq_power: f64) -> (bool, f64) {
    assert!(k <= f.radius(), "cutoff must lie inside the field ball");
    assert!(bound >= 0.0, "decay bound must be nonnegative");
    let mut margin = f64::INFINITY;
    for_each_mode_in_shell_sq(k * k, closed_ball_sq(f.radius()), |xi, nsq| {
        let nsq = nsq as f64;
        // powf(x, 1) is exact but slow; the common quadratic weight skips it.
        let w = if nsq_power == 1.0 {
            nsq
        } else {
            nsq.powf(nsq_power)
        };
        let m = bound / w - vec3_sup(&f.get(xi));
        if m < margin {
            margin = m;
        }
    });
    (margin >= 0.0, margin)
}

/// sup over stored modes with |xi| >= k of |xi|^(2 nsq_power) |f(xi)|. The
/// dual view of `power_decay_check`: sup <= bound iff the min margin is
/// nonnegative, but this form reads directly against the hypothesis constant.
fn hypothesis_sup(f: &SpectralField, k: f64, nsq_power: f64) -> f64 {
    let ksq = k * k;
    let mut best = 0.0f64;
    for (xi, v) in f.iter() {
        let nsq = xi.norm_sq() as f64;
        if nsq >= ksq {
            let w = if nsq_power == 1.0 {
                nsq
            } else {
                nsq.powf(nsq_power)
            };
            best = best.max(w * vec3_sup(v));
        }
    }
    best
}

/// Does |f(xi)| <= bound / |xi|^2 hold for every mode with |xi| >= k, and by
/// how much at the tightest site? Absent modes inside the ball participate,
/// so a zero field reports bound over the largest shell weight rather than
/// infinity. Requires k <= radius.
pub fn shell_decay_check(f: &SpectralField, k: f64, bound: f64) -> (bool, f64) {
    power_decay_check(f, k, bound, 1.0)
}

fn feasible_note(feasible: &Option<usize>) -> String {
    match feasible {
        Some(d) => format!("largest feasible depth here is {d}"),
        None => "no depth fits this radius".to_string(),
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum BootstrapError {
    /// The ladder's top cutoff leaves the truncation ball, so its stage
    /// hypotheses would quantify over modes the field cannot represent.
    #[error(
        "stage cutoff k_{depth} = {k_top:.6e} exceeds the field radius {r}; {}",
        feasible_note(.feasible)
    )]
    ScheduleTooDeep {
        depth: usize,
        k_top: f64,
        r: f64,
        feasible: Option<usize>,
    },
}

/// One rung of the induction. `margin` is the minimum-form slack from the
/// per-mode check; `sup` is the same evidence read as a hypothesis constant,
/// the largest |xi|^2 |v| over checked nodes and stored modes past the
/// cutoff. The chain fields hold the restarted predictions checked against
/// the next stage's bound, absent on the final rung.
#[derive(Clone, Debug)]
pub struct StageOutcome {
    pub stage: usize,
    pub cutoff: f64,
    pub mu: u64,
    pub bound: f64,
    pub pass: bool,
    pub margin: f64,
    pub sup: f64,
    pub nodes_checked: usize,
    pub chain_pass: Option<bool>,
    pub chain_margin: Option<f64>,
    pub chain_sup: Option<f64>,
}

/// The quarter-power endgame: direct check of |v| <= D / |xi|^(2 + 1/4) past
/// the target time, plus a fitted decay exponent from the first qualifying
/// node as corroboration. The fit is skipped, not failed, when fewer than
/// three shells carry data.
#[derive(Clone, Debug)]
pub struct TerminalOutcome {
    pub pass: bool,
    pub margin: f64,
    /// sup of |xi|^(2 + 1/4) |v| over checked nodes and stored modes.
    pub measured: f64,
    pub exponent_target: f64,
    pub fit: Option<DecayFit>,
    pub fit_pass: bool,
    pub nodes_checked: usize,
}

#[derive(Clone, Debug)]
pub struct BootstrapRunReport {
    pub schedule: BootstrapSchedule,
    pub stages: Vec<StageOutcome>,
    pub terminal: TerminalOutcome,
    pub all_pass: bool,
}

impl BootstrapRunReport {
    pub fn records(&self) -> Vec<CheckRecord> {
        let mut out = Vec::new();
        for s in &self.stages {
            out.push(CheckRecord::le(
                format!("bootstrap/stage-{}", s.stage),
                "stored states keep the stage decay hypothesis past its activation time",
                format!(
                    "cutoff={:.6e} tau={:.6e} mu={} nodes={}",
                    s.cutoff,
                    self.schedule.tau[s.stage],
                    s.mu,
                    s.nodes_checked
                ),
                s.sup,
                s.bound,
            ));
            if let Some(chain_sup) = s.chain_sup {
                out.push(CheckRecord::le(
                    format!("bootstrap/chain-{}", s.stage),
                    "restarted mild predictions meet the next stage's bound",
                    format!(
                        "next_cutoff={:.6e} next_tau={:.6e}",
                        self.schedule.k[s.stage + 1],
                        self.schedule.tau[s.stage + 1]
                    ),
                    chain_sup,
                    self.schedule.stage_bound(s.stage + 1),
                ));
            }
        }
        out.push(CheckRecord::le(
            "bootstrap/terminal",
            "terminal decay with the extra quarter power",
            format!(
                "k0={:.6e} rho={:.6e} nodes={}",
                self.schedule.k[0],
                self.schedule.rho,
                self.terminal.nodes_checked
            ),
            self.terminal.measured,
            self.schedule.d,
        ));
        if let Some(f) = &self.terminal.fit {
            out.push(CheckRecord::ge(
                "bootstrap/decay-exponent",
                "fitted shell decay exponent corroborates the terminal rate",
                format!(
                    "shells={} k_min={:.6e} fit_residual={:.3e}",
                    f.shells_used,
                    self.schedule.k[0],
                    f.residual
                ),
                f.exponent,
                self.terminal.exponent_target - FIT_SLACK,
            ));
        }
        out
    }
}

fn first_node_index_after(grid: &TimeGrid, t: f64) -> usize {
    (0..grid.num_nodes())
        .find(|&j| grid.node(j) > t)
        .expect("activation time lies inside the horizon")
}

/// Runs the decay induction against a converged trajectory.
///
/// Stage m checks every stored state at nodes strictly past tau_m against
/// eps^{mu_m} / |xi|^2 for |xi| >= k_m. Between consecutive stages the same
/// hypothesis is re-checked on the mild identity restarted at the first
/// active node, so the step from stage m to m+1 rests on the evolution and
/// not only on the stored data. Past the target time rho the terminal bound
/// D / |xi|^(2 + 1/4) takes over for |xi| >= k_0, corroborated by a fitted
/// decay exponent from the first terminal node.
///
/// A failed check is reported, not raised. Callers are expected to hand in a
/// trajectory their solver actually converged on; nothing here can tell a
/// fixed point from an abandoned iterate.
pub fn regularity_bootstrap_run(
    traj: &Trajectory,
    schedule: &BootstrapSchedule,
    sym: &BilinearSymbol,
    engine: ConvEngine,
) -> Result<BootstrapRunReport, BootstrapError> {
    let r = traj.radius();
    let k_top = *schedule.k.last().expect("schedule carries k_0 at least");
    if k_top > r {
        let feasible =
            max_feasible_depth(schedule.eps, schedule.rho, schedule.d, schedule.k_minus1, r)
                .expect("schedule eps was validated at construction");
        return Err(BootstrapError::ScheduleTooDeep {
            depth: schedule.depth,
            k_top,
            r,
            feasible,
        });
    }
    let grid = traj.grid();
    assert!(
        schedule.rho < grid.horizon(),
        "target time must land inside the trajectory horizon"
    );

    let mut stages = Vec::with_capacity(schedule.depth + 1);
    for m in 0..=schedule.depth {
        let cutoff = schedule.k[m];
        let bound = schedule.stage_bound(m);
        let mut pass = true;
        let mut margin = f64::INFINITY;
        let mut sup = 0.0f64;
        let mut nodes_checked = 0usize;
        for j in 0..grid.num_nodes() {
            if grid.node(j) > schedule.tau[m] {
                let (p, mg) = power_decay_check(traj.state(j), cutoff, bound, 1.0);
                pass &= p;
                margin = margin.min(mg);
                sup = sup.max(hypothesis_sup(traj.state(j), cutoff, 1.0));
                nodes_checked += 1;
            }
        }

        let chain = if m < schedule.depth {
            let next_cutoff = schedule.k[m + 1];
            let next_bound = schedule.stage_bound(m + 1);
            let start = first_node_index_after(grid, schedule.tau[m]);
            let preds = restart_predictions(traj, start, sym, engine);
            let mut cpass = true;
            let mut cmargin = f64::INFINITY;
            let mut csup = 0.0f64;
            for (i, pred) in preds.iter().enumerate() {
                if grid.node(start + i) > schedule.tau[m + 1] {
                    let (p, mg) = power_decay_check(pred, next_cutoff, next_bound, 1.0);
                    cpass &= p;
                    cmargin = cmargin.min(mg);
                    csup = csup.max(hypothesis_sup(pred, next_cutoff, 1.0));
                }
            }
            Some((cpass, cmargin, csup))
        } else {
            None
        };

        stages.push(StageOutcome {
            stage: m,
            cutoff,
            mu: schedule.mu[m],
            bound,
            pass,
            margin,
            sup,
            nodes_checked,
            chain_pass: chain.map(|c| c.0),
            chain_margin: chain.map(|c| c.1),
            chain_sup: chain.map(|c| c.2),
        });
    }

    let k0 = schedule.k[0];
    let half_power = TERMINAL_EXPONENT / 2.0;
    let mut t_pass = true;
    let mut t_margin = f64::INFINITY;
    let mut measured = 0.0f64;
    let mut nodes_checked = 0usize;
    let mut fit = None;
    for j in 0..grid.num_nodes() {
        if grid.node(j) >= schedule.rho {
            let s = traj.state(j);
            let (p, mg) = power_decay_check(s, k0, schedule.d, half_power);
            t_pass &= p;
            t_margin = t_margin.min(mg);
            measured = measured.max(hypothesis_sup(s, k0, half_power));
            if nodes_checked == 0 {
                fit = fit_decay_exponent(s, k0).ok();
            }
            nodes_checked += 1;
        }
    }
    let fit_pass = fit
        .as_ref()
        .map_or(true, |f: &DecayFit| f.exponent >= TERMINAL_EXPONENT - FIT_SLACK);
    let terminal = TerminalOutcome {
        pass: t_pass,
        margin: t_margin,
        measured,
        exponent_target: TERMINAL_EXPONENT,
        fit,
        fit_pass,
        nodes_checked,
    };

    let stages_pass = stages
        .iter()
        .all(|s| s.pass && s.chain_pass.unwrap_or(true));
    let all_pass = stages_pass && terminal.pass && terminal.fit_pass;
    Ok(BootstrapRunReport {
        schedule: schedule.clone(),
        stages,
        terminal,
        all_pass,
    })
}
