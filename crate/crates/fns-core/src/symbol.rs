//! The bilinear symbols M_ijk(xi).
//!
//! The nonlinearity is B(u, v)(xi) = sum_q M_ijk(xi) u^i(q) v^j(xi - q),
//! summed over i, j with output component k. Every admissible symbol obeys
//! |M_ijk(xi)| <= c |xi|: the estimates downstream use nothing else about
//! it, which is why a worst-case symbol that saturates the bound belongs
//! here next to the physical one.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::field::{Frequency, Vec3};
use crate::sums::modes_in_ball;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolKind {
    /// M_ijk(xi) = -i xi_i (delta_jk - xi_j xi_k / |xi|^2): advection
    /// composed with the projector onto divergence-free fields. Satisfies
    /// sum_k M_ijk(xi) xi_k = 0, so outputs are divergence free.
    NavierStokesLeray,
    /// |xi| on the diagonal i = j = k, zero elsewhere: saturates the
    /// |M| <= |xi| bound with no cancellation, the adversarial case for
    /// every estimate that only uses the bound.
    WorstCaseScalar,
    /// M = 0; isolates the linear (heat) part of the flow.
    Zero,
}

impl SymbolKind {
    pub fn name(self) -> &'static str {
        match self {
            SymbolKind::NavierStokesLeray => "navier_stokes_leray",
            SymbolKind::WorstCaseScalar => "worst_case_scalar",
            SymbolKind::Zero => "zero",
        }
    }
}

/// A symbol kind together with the constant c in the growth bound
/// |M_ijk(xi)| <= c |xi| that claims about it are checked against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilinearSymbol {
    pub kind: SymbolKind,
    pub bound_constant: f64,
}

impl BilinearSymbol {
    /// Both built-in kinds satisfy the bound with constant 1.
    pub fn new(kind: SymbolKind) -> Self {
        BilinearSymbol {
            kind,
            bound_constant: 1.0,
        }
    }

    pub fn with_bound_constant(kind: SymbolKind, bound_constant: f64) -> Self {
        assert!(bound_constant > 0.0);
        BilinearSymbol {
            kind,
            bound_constant,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.kind == SymbolKind::Zero
    }

    /// max_ijk |M_ijk(xi)|; the prefactor pulled out of every shell
    /// estimate.
    pub fn sup_abs(&self, xi: Frequency) -> f64 {
        match self.kind {
            SymbolKind::Zero => 0.0,
            SymbolKind::WorstCaseScalar => xi.norm(),
            SymbolKind::NavierStokesLeray => {
                let t = eval_symbol(self, xi);
                let mut sup = 0.0f64;
                for row in &t {
                    for col in row {
                        for entry in col {
                            sup = sup.max(entry.norm());
                        }
                    }
                }
                sup
            }
        }
    }

    /// Single-pair contraction: out^k = sum_ij M_ijk(xi) u^i v^j. The
    /// convolution kernels accumulate smarter than this, but this is the
    /// reference everything else is compared against.
    pub fn apply_pair(&self, xi: Frequency, u: &Vec3, v: &Vec3) -> Vec3 {
        let t = eval_symbol(self, xi);
        let mut out = [Complex64::ZERO; 3];
        for (i, ti) in t.iter().enumerate() {
            for (j, tij) in ti.iter().enumerate() {
                let uv = u[i] * v[j];
                for (k, m) in tij.iter().enumerate() {
                    out[k] += m * uv;
                }
            }
        }
        out
    }
}

/// Dense tensor indexed [i][j][k].
pub type SymbolTensor = [[[Complex64; 3]; 3]; 3];

/// Evaluates the full 27-entry tensor at one frequency.
pub fn eval_symbol(sym: &BilinearSymbol, xi: Frequency) -> SymbolTensor {
    let zero = [[[Complex64::ZERO; 3]; 3]; 3];
    match sym.kind {
        SymbolKind::Zero => zero,
        SymbolKind::WorstCaseScalar => {
            let mut t = zero;
            let n = xi.norm();
            for d in 0..3 {
                t[d][d][d] = Complex64::new(n, 0.0);
            }
            t
        }
        SymbolKind::NavierStokesLeray => {
            let mut t = zero;
            let [x, y, z] = xi.components();
            let c = [x as f64, y as f64, z as f64];
            let nsq = xi.norm_sq() as f64;
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        let proj = if j == k { 1.0 } else { 0.0 } - c[j] * c[k] / nsq;
                        t[i][j][k] = Complex64::new(0.0, -c[i] * proj);
                    }
                }
            }
            t
        }
    }
}

/// sup over 1 <= |xi| <= r of max_ijk |M_ijk(xi)| / (c |xi|): at most 1 for
/// a symbol honoring its declared growth bound, and the measured headroom
/// otherwise.
pub fn symbol_bound_margin(sym: &BilinearSymbol, r: f64) -> f64 {
    let mut worst = 0.0f64;
    for xi in modes_in_ball(r) {
        let ratio = sym.sup_abs(xi) / (sym.bound_constant * xi.norm());
        worst = worst.max(ratio);
    }
    worst
}
