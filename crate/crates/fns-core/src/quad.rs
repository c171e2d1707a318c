//! Kernel-exact quadrature for the Duhamel integral at one frequency.
//!
//! For a mode xi with damping rate a = |xi|^2, the mild formulation needs
//!
//! ```text
//! I(t) = integral over [0, t] of exp(-a (t - s)) F(s) ds
//! ```
//!
//! with F sampled at the nodes of a uniform grid. Instead of discretizing
//! the exponential we integrate it exactly against an interpolant of F on
//! each substep, so the only error is the interpolation error of F. With
//! linear interpolation the rule is exact for piecewise-linear forcing;
//! the quadratic refinement is exact for quadratic forcing and exists to
//! measure how much the linear rule leaves behind.
//!
//! Substep weights reduce to the entire family
//!
//! ```text
//! phi1(th) = (1 - exp(-th)) / th
//! psi2(th) = (th - 1 + exp(-th)) / th^2 = (1 - phi1) / th
//! psi3(th) = (th^2 - 2 th + 2 - 2 exp(-th)) / th^3 = (1 - 2 psi2) / th
//! ```
//!
//! with th = a * dt. Each is analytic at th = 0; below a small-exponent
//! threshold the closed forms are replaced by their Taylor polynomials to
//! dodge the cancellation in the numerators. Contributions are summed in
//! ascending node order, so results are bitwise deterministic.

use thiserror::Error;

use crate::field::{Frequency, Vec3, ZERO_VEC3};
use crate::grid::TimeGrid;

/// Interpolation order for the forcing between grid nodes.
///
/// `Linear` is the production rule. `Quadratic` sharpens each substep with
/// a three-point parabola and is used to expose the discretization error
/// of the linear rule; it never feeds back into the iteration itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadOrder {
    Linear,
    Quadratic,
}

#[derive(Debug, Error, PartialEq)]
pub enum QuadError {
    #[error("time {t} is not a node of the quadrature grid")]
    OffGridTime { t: f64 },
    #[error("forcing samples do not cover [0, t]: have {have}, need {need}")]
    SampleCount { have: usize, need: usize },
}

/// Below this value of |xi|^2 * dt the phi-weights switch to series form.
pub const SERIES_THRESHOLD: f64 = 1e-4;

/// phi1(th) = (1 - e^-th)/th, the mean of the kernel over one substep.
pub fn phi1(theta: f64) -> f64 {
    debug_assert!(theta >= 0.0);
    if theta < SERIES_THRESHOLD {
        1.0 + theta * (-0.5 + theta * (1.0 / 6.0 + theta * (-1.0 / 24.0)))
    } else {
        -f64::exp_m1(-theta) / theta
    }
}

/// psi2(th) = (th - 1 + e^-th)/th^2, the kernel mean against a linear ramp.
pub fn psi2(theta: f64) -> f64 {
    debug_assert!(theta >= 0.0);
    if theta < SERIES_THRESHOLD {
        0.5 + theta * (-1.0 / 6.0 + theta * (1.0 / 24.0 + theta * (-1.0 / 120.0)))
    } else {
        // (1 - phi1)/th cancels one digit per decade below th ~ 1; the
        // threshold keeps the loss under ~1e-11 relative.
        (1.0 - phi1(theta)) / theta
    }
}

/// psi3(th) = (th^2 - 2 th + 2 - 2 e^-th)/th^3, against a quadratic ramp.
pub fn psi3(theta: f64) -> f64 {
    debug_assert!(theta >= 0.0);
    if theta < SERIES_THRESHOLD {
        1.0 / 3.0 + theta * (-1.0 / 12.0 + theta * (1.0 / 60.0 + theta * (-1.0 / 360.0)))
    } else {
        // Conditioning of the closed form degrades like 1/th^2; at the
        // threshold that is ~1e-7 relative, harmless for a correction
        // weight and gone entirely for the th >= 1e-3 the solver produces.
        (1.0 - 2.0 * psi2(theta)) / theta
    }
}

/// Shared core: integrate exp(-a(t_j - s)) F(s) over [0, t_j] given the
/// samples F(s_0..s_j) and substep h. Callers validate coverage.
pub(crate) fn duhamel_core(a: f64, samples: &[Vec3], h: f64, j: usize, order: QuadOrder) -> Vec3 {
    debug_assert!(samples.len() > j);
    let theta = a * h;
    let w1 = phi1(theta);
    let w2 = psi2(theta);
    let w3 = psi3(theta);

    let mut out = ZERO_VEC3;
    for i in 0..j {
        // Exact kernel factor for the gap between substep i and time t_j.
        let damp = (-a * ((j - 1 - i) as f64) * h).exp();
        let scale = damp * h;
        let fi = &samples[i];
        let fip1 = &samples[i + 1];
        match order {
            // A parabola needs three nodes; a single-substep integral
            // falls back to the linear rule.
            QuadOrder::Quadratic if j >= 2 => {
                for k in 0..3 {
                    // bh = h * F'(s_i), ch2 = h^2 * F''(s_i)/2, from the
                    // stencil centered at s_i (one-sided at the left edge).
                    let (bh, ch2) = if i == 0 {
                        let f2 = &samples[2];
                        (
                            (fi[k] * -3.0 + fip1[k] * 4.0 - f2[k]) * 0.5,
                            (fi[k] - fip1[k] * 2.0 + f2[k]) * 0.5,
                        )
                    } else {
                        let fim1 = &samples[i - 1];
                        (
                            (fip1[k] - fim1[k]) * 0.5,
                            (fip1[k] - fi[k] * 2.0 + fim1[k]) * 0.5,
                        )
                    };
                    out[k] += (fi[k] * w1 + bh * w2 + ch2 * w3) * scale;
                }
            }
            _ => {
                for k in 0..3 {
                    out[k] += (fi[k] * (w1 - w2) + fip1[k] * w2) * scale;
                }
            }
        }
    }
    out
}

/// Integral of exp(-|xi|^2 (t - s)) F(s) over [0, t] with F linearly
/// interpolated between its grid samples. `t` must be a node of `grid` and
/// `samples` must hold one value per node up to and including it.
pub fn duhamel_quadrature(
    xi: Frequency,
    samples: &[Vec3],
    grid: &TimeGrid,
    t: f64,
) -> Result<Vec3, QuadError> {
    duhamel_quadrature_refined(xi, samples, grid, t, QuadOrder::Linear)
}

/// Same contract as [`duhamel_quadrature`] with a caller-chosen
/// interpolation order.
pub fn duhamel_quadrature_refined(
    xi: Frequency,
    samples: &[Vec3],
    grid: &TimeGrid,
    t: f64,
    order: QuadOrder,
) -> Result<Vec3, QuadError> {
    let j = grid.node_index(t).ok_or(QuadError::OffGridTime { t })?;
    if samples.len() < j + 1 {
        return Err(QuadError::SampleCount {
            have: samples.len(),
            need: j + 1,
        });
    }
    Ok(duhamel_core(
        xi.norm_sq() as f64,
        samples,
        grid.dt(),
        j,
        order,
    ))
}
