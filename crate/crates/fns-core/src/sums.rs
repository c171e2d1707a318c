//! Deterministic lattice enumeration and shell sums.
//!
//! Everything that sums over lattice modes does so in a fixed lexicographic
//! order with a fixed-shape pairwise tree reduction, so results are bitwise
//! reproducible across runs and across thread counts (parallel callers sum
//! disjoint per-output pieces, each internally sequential).
//!
//! Shell sums of |q|^{-p} come in two flavours: exact enumeration over a
//! finite half-open shell, and enumeration to a cutoff plus a certified
//! analytic tail for infinite upper limits (p > 3 only; below that the tail
//! diverges).

use thiserror::Error;

use crate::field::Frequency;

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("shell range is empty or inverted: [{lo}, {hi})")]
    BadRange { lo: f64, hi: f64 },
    #[error("sum of |q|^-{p} over an infinite shell diverges for p <= 3")]
    DivergentTail { p: f64 },
}

/// Streaming pairwise summation with a fixed tree shape.
///
/// Values are combined like a binary counter: the n-th pushed value merges
/// with earlier partial sums exactly when the low bits of n roll over. The
/// shape depends only on how many values are pushed, never on their
/// magnitudes, so a fixed enumeration order gives a bitwise-fixed result
/// with O(log n) memory and better roundoff than a running sum.
pub struct TreeSum {
    levels: Vec<Option<f64>>,
}

impl TreeSum {
    pub fn new() -> Self {
        TreeSum { levels: Vec::new() }
    }

    pub fn push(&mut self, x: f64) {
        let mut carry = x;
        for slot in self.levels.iter_mut() {
            match slot.take() {
                None => {
                    *slot = Some(carry);
                    return;
                }
                Some(lower) => carry = lower + carry,
            }
        }
        self.levels.push(Some(carry));
    }

    /// Folds the remaining partial sums, lowest level first.
    pub fn total(self) -> f64 {
        let mut acc = 0.0;
        for v in self.levels.into_iter().flatten() {
            acc += v;
        }
        acc
    }
}

impl Default for TreeSum {
    fn default() -> Self {
        TreeSum::new()
    }
}

pub fn tree_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut t = TreeSum::new();
    for x in xs {
        t.push(x);
    }
    t.total()
}

/// Visits every nonzero mode with lo_sq <= |q|^2 < hi_sq in lexicographic
/// order, passing the mode and its exact |q|^2. Working with squared radii
/// keeps boundary membership a pure f64-vs-integer comparison with no sqrt
/// round trip. The z range is clipped per (x, y) so the cost follows the
/// ball volume, not the bounding cube.
pub fn for_each_mode_in_shell_sq(lo_sq: f64, hi_sq: f64, mut visit: impl FnMut(Frequency, i64)) {
    assert!(hi_sq.is_finite(), "shell enumeration needs a finite upper limit");
    if !(hi_sq > lo_sq) || hi_sq <= 0.0 {
        return;
    }
    let lo_sq = lo_sq.max(0.0);
    // Largest component magnitude: the biggest integer b with b^2 < hi_sq.
    let mut b = hi_sq.sqrt().floor() as i64;
    while b > 0 && (b * b) as f64 >= hi_sq {
        b -= 1;
    }
    for x in -b..=b {
        let xx = x * x;
        if xx as f64 >= hi_sq {
            continue;
        }
        for y in -b..=b {
            let xxyy = xx + y * y;
            if xxyy as f64 >= hi_sq {
                continue;
            }
            // Over-estimate is fine, the exact check below rejects stragglers.
            let zmax = ((hi_sq - xxyy as f64).sqrt().ceil() as i64).min(b);
            for z in -zmax..=zmax {
                let nsq = xxyy + z * z;
                if nsq == 0 {
                    continue;
                }
                let nf = nsq as f64;
                if nf < lo_sq || nf >= hi_sq {
                    continue;
                }
                visit(Frequency::new([x, y, z]).unwrap(), nsq);
            }
        }
    }
}

/// Half-open shell lo <= |q| < hi in radius terms.
pub fn for_each_mode_in_shell(lo: f64, hi: f64, visit: impl FnMut(Frequency, i64)) {
    let lo_sq = if lo <= 0.0 { 0.0 } else { lo * lo };
    if hi.is_infinite() {
        panic!("for_each_mode_in_shell requires a finite upper limit");
    }
    for_each_mode_in_shell_sq(lo_sq, hi * hi, visit);
}

/// |q|^2 threshold equivalent to the closed ball |q| <= r: since |q|^2 is an
/// integer, |q| <= r iff |q|^2 < floor(r^2) + 1.
pub fn closed_ball_sq(r: f64) -> f64 {
    (r * r).floor() + 1.0
}

/// All modes with 1 <= |q| <= r (closed ball), lexicographic. The closed
/// upper boundary matches the truncation convention of spectral fields.
pub fn modes_in_ball(r: f64) -> Vec<Frequency> {
    let mut out = Vec::new();
    for_each_mode_in_shell_sq(0.0, closed_ball_sq(r), |q, _| out.push(q));
    out
}

/// Number of modes in the closed ball, without materializing them.
pub fn ball_mode_count(r: f64) -> usize {
    let mut n = 0usize;
    for_each_mode_in_shell_sq(0.0, closed_ball_sq(r), |_, _| n += 1);
    n
}

/// A shell sum with its enumeration/tail split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellSum {
    /// enumerated + tail_bound; an upper bound when the tail is nonzero,
    /// exact (up to roundoff) otherwise.
    pub value: f64,
    /// Exact part, enumerated mode by mode.
    pub enumerated: f64,
    /// Radius at which enumeration stopped and the analytic bound took over.
    pub cutoff: f64,
    /// Certified bound on the discarded tail; 0 for finite shells.
    pub tail_bound: f64,
}

/// Sum of |q|^{-p} over the half-open shell lo <= |q| < hi.
///
/// `hi` may be `f64::INFINITY` when p > 3: enumeration runs to the cutoff
/// 4 max(lo, 1) and the remainder is covered by the analytic tail bound,
/// with both parts reported. For finite `hi` the sum is exact enumeration.
pub fn shell_sum_inverse_power(lo: f64, hi: f64, p: f64) -> Result<ShellSum, LatticeError> {
    if hi < lo {
        return Err(LatticeError::BadRange { lo, hi });
    }
    if hi.is_infinite() {
        if p <= 3.0 {
            return Err(LatticeError::DivergentTail { p });
        }
        let cutoff = 4.0 * lo.max(1.0);
        let enumerated = enumerate_inverse_power(lo, cutoff, p);
        let tail = tail_integral_bound(cutoff, p);
        return Ok(ShellSum {
            value: enumerated + tail,
            enumerated,
            cutoff,
            tail_bound: tail,
        });
    }
    let enumerated = enumerate_inverse_power(lo, hi, p);
    Ok(ShellSum {
        value: enumerated,
        enumerated,
        cutoff: hi,
        tail_bound: 0.0,
    })
}

/// Sum of |q|^{-p} over the strictly outer region |q| > r, p > 3; the
/// truncation-tail quantity. Enumerates (r, 4 max(r, 1)) exactly and covers
/// the rest with the analytic bound.
pub fn tail_sum_beyond(r: f64, p: f64) -> Result<ShellSum, LatticeError> {
    if p <= 3.0 {
        return Err(LatticeError::DivergentTail { p });
    }
    let lo_sq = (r * r).floor() + 1.0; // integer |q|^2 > r^2
    let cutoff = 4.0 * r.max(1.0);
    let mut acc = TreeSum::new();
    for_each_mode_in_shell_sq(lo_sq, cutoff * cutoff, |_, nsq| {
        let n = nsq as f64;
        acc.push(n.powf(-p / 2.0));
    });
    let enumerated = acc.total();
    let tail = tail_integral_bound(cutoff, p);
    Ok(ShellSum {
        value: enumerated + tail,
        enumerated,
        cutoff,
        tail_bound: tail,
    })
}

fn enumerate_inverse_power(lo: f64, hi: f64, p: f64) -> f64 {
    let mut acc = TreeSum::new();
    // Even integer powers avoid powf in the hot path.
    if p == 2.0 {
        for_each_mode_in_shell(lo, hi, |_, nsq| acc.push(1.0 / nsq as f64));
    } else if p == 4.0 {
        for_each_mode_in_shell(lo, hi, |_, nsq| {
            let n = nsq as f64;
            acc.push(1.0 / (n * n))
        });
    } else {
        let half = -p / 2.0;
        for_each_mode_in_shell(lo, hi, |_, nsq| acc.push((nsq as f64).powf(half)));
    }
    acc.total()
}

/// Bound on sum_{|q| >= l} |q|^{-p}, p > 3, via disjoint unit cubes: the
/// cube centered at q lies in {|x| >= l - sqrt(3)/2} and |q| >= |x| - sqrt(3)/2
/// on it, so the sum is at most the integral of (|x| - sqrt(3)/2)^{-p} over
/// that region. In spherical shells with u = s - sqrt(3)/2 and A = l - sqrt(3):
///   4 pi [ A^{3-p}/(p-3) + sqrt(3) A^{2-p}/(p-2) + (3/4) A^{1-p}/(p-1) ].
/// Requires l > sqrt(3); every cutoff used here is >= 4.
fn tail_integral_bound(l: f64, p: f64) -> f64 {
    assert!(l > 3.0f64.sqrt(), "tail bound needs cutoff > sqrt(3)");
    assert!(p > 3.0);
    let a = l - 3.0f64.sqrt();
    let t1 = a.powf(3.0 - p) / (p - 3.0);
    let t2 = 3.0f64.sqrt() * a.powf(2.0 - p) / (p - 2.0);
    let t3 = 0.75 * a.powf(1.0 - p) / (p - 1.0);
    4.0 * std::f64::consts::PI * (t1 + t2 + t3)
}
