//! Bootstrap schedules: the cutoff/exponent/time ladders the decay
//! induction climbs.
//!
//! A schedule is built from the data size eps, a target time rho, the
//! measured solution bound D, and a low cutoff k_minus1 below which nothing
//! is claimed. Stage n of the induction asserts component bounds
//! eps^{mu_n} / |xi|^2 above the cutoff k_n = k_0 / eps^{2^n} for times past
//! tau_n = rho - rho/2^n; the cutoffs square their way up so only a couple
//! of stages ever fit inside a desk-scale truncation ball, which
//! [`max_feasible_depth`] makes explicit instead of hiding.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// How the exponent ladder mu_n is generated.
///
/// The recurrence mu_{n+1} = 2 mu_n - 1 fixes mu_n = 1 forever if seeded
/// with mu_1 = 1, which contradicts the growth mu_n >= 2^{n-1} the induction
/// needs; seeding mu_1 = 2 gives mu_n = 2^{n-1} + 1 and the growth holds.
/// Both ladders are available so the difference stays visible in reports;
/// `Corrected` is the default everywhere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecurrenceMode {
    PaperLiteral,
    Corrected,
}

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("eps = {eps} is outside (0, 1/28); the closure constant needs 28 eps < 1")]
    EpsOutOfRange { eps: f64 },
}

/// The ladders for one bootstrap run. `mu` carries one extra entry past
/// `depth` so the final stage's successor exponent is always available.
#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapSchedule {
    pub eps: f64,
    pub rho: f64,
    /// Measured sup over nodes of the solution's phi2 norm.
    pub d: f64,
    pub k_minus1: f64,
    pub k_0: f64,
    /// mu_0 ..= mu_{depth+1}.
    pub mu: Vec<u64>,
    /// k_0 ..= k_depth, k_n = k_0 / eps^{2^n}.
    pub k: Vec<f64>,
    /// tau_0 ..= tau_depth, tau_n = rho - rho/2^n.
    pub tau: Vec<f64>,
    pub depth: usize,
    pub mode: RecurrenceMode,
}

/// Largest value the smallness threshold may take, exclusive.
pub const EPS_LIMIT: f64 = 1.0 / 28.0;

fn mu_ladder(mode: RecurrenceMode, len: usize) -> Vec<u64> {
    let mut mu = Vec::with_capacity(len);
    mu.push(1u64);
    if len > 1 {
        mu.push(match mode {
            RecurrenceMode::PaperLiteral => 1,
            RecurrenceMode::Corrected => 2,
        });
    }
    while mu.len() < len {
        let last = *mu.last().unwrap();
        mu.push(2 * last - 1);
    }
    mu
}

/// eps^{2^n} by iterated squaring: e_{n+1} = e_n^2, one rounding per stage,
/// so consecutive cutoffs differ by exactly one stored factor.
fn eps_powers(eps: f64, depth: usize) -> Vec<f64> {
    let mut e = Vec::with_capacity(depth + 1);
    e.push(eps);
    for n in 0..depth {
        let last = e[n];
        e.push(last * last);
    }
    e
}

/// Builds the schedule. `k_0` is the smallest value satisfying
/// (k_minus1 / k_0) D < min(eps, 1/2), nudged one part in 1e12 above the
/// boundary so the inequality is strict in floating point too.
pub fn bootstrap_schedule(
    eps: f64,
    rho: f64,
    d: f64,
    k_minus1: f64,
    depth: usize,
    mode: RecurrenceMode,
) -> Result<BootstrapSchedule, ScheduleError> {
    if !(eps > 0.0 && eps < EPS_LIMIT) {
        return Err(ScheduleError::EpsOutOfRange { eps });
    }
    assert!(rho > 0.0, "target time must be positive");
    assert!(d > 0.0, "solution bound must be positive");
    assert!(k_minus1 > 0.0, "low cutoff must be positive");
    assert!(depth <= 30, "cutoff ladder overflows f64 long before this");

    // eps < 1/28 < 1/2, so the min is always eps; spelled out anyway to
    // keep the defining inequality recognizable.
    let threshold = eps.min(0.5);
    let k_0 = (k_minus1 * d / threshold) * (1.0 + 1e-12);

    let powers = eps_powers(eps, depth);
    let mut k = Vec::with_capacity(depth + 1);
    for e in &powers {
        k.push(k_0 / e);
    }
    let tau: Vec<f64> = (0..=depth as u32)
        .map(|n| rho - rho / f64::from(2u32.pow(n)))
        .collect();

    Ok(BootstrapSchedule {
        eps,
        rho,
        d,
        k_minus1,
        k_0,
        mu: mu_ladder(mode, depth + 2),
        k,
        tau,
        depth,
        mode,
    })
}

impl BootstrapSchedule {
    /// Stage-n component bound: eps^{mu_n}.
    pub fn stage_bound(&self, n: usize) -> f64 {
        self.eps.powi(self.mu[n] as i32)
    }
}

/// Largest depth whose top cutoff still fits inside the truncation ball, or
/// `None` when even k_0 does not. Scanning is cheap because the ladder
/// squares: it clears any radius within a handful of steps.
pub fn max_feasible_depth(
    eps: f64,
    rho: f64,
    d: f64,
    k_minus1: f64,
    r: f64,
) -> Result<Option<usize>, ScheduleError> {
    // Depth 0 decides feasibility; deeper ladders share the same k_0.
    let base = bootstrap_schedule(eps, rho, d, k_minus1, 0, RecurrenceMode::Corrected)?;
    if base.k_0 > r {
        return Ok(None);
    }
    let mut depth = 0usize;
    let mut power = eps;
    loop {
        // k_{depth+1} = k_0 / eps^{2^{depth+1}}.
        let next_power = power * power;
        if base.k_0 / next_power > r || depth >= 30 {
            return Ok(Some(depth));
        }
        power = next_power;
        depth += 1;
    }
}
