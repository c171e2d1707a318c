//! The bilinear convolution B(u, v)(xi) = sum_q M_ijk(xi) u^i(q) v^j(xi - q).
//!
//! Two independent routes compute the same sum:
//!
//! - [`bilinear_direct`]: literal summation over admissible q. Quadratic in
//!   the mode count and kept simple on purpose; it is the oracle.
//! - [`bilinear_fft`]: nine componentwise convolutions W_ij via forward and
//!   inverse DFTs on a grid wide enough that linear convolution of supports
//!   in [-R, R] cannot wrap, followed by pointwise contraction with the
//!   symbol. Mathematically identical to the direct route; the equivalence
//!   is enforced by tests and by the benchmark gate, never assumed.
//!
//! Both routes visit output modes in the same fixed order and keep per-output
//! summation sequential, so results are bitwise independent of thread count.
//!
//! The truncation is Galerkin: a pair (q, xi - q) contributes only when both
//! factors lie inside the ball of radius R. There is no aliasing to remove
//! by construction.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{Frequency, SpectralField, Vec3, ZERO_VEC3};
use crate::sums::modes_in_ball;
use crate::symbol::{BilinearSymbol, SymbolKind};

#[derive(Debug, Error, PartialEq)]
pub enum ConvError {
    #[error("operands live on different truncation balls: {left} vs {right}")]
    RadiusMismatch { left: f64, right: f64 },
}

/// Which route computes a convolution; everything downstream of the solver
/// takes this explicitly so experiments can pin the engine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvEngine {
    Direct,
    Fft,
}

pub fn bilinear(
    engine: ConvEngine,
    u: &SpectralField,
    v: &SpectralField,
    sym: &BilinearSymbol,
) -> Result<SpectralField, ConvError> {
    match engine {
        ConvEngine::Direct => bilinear_direct(u, v, sym),
        ConvEngine::Fft => bilinear_fft(u, v, sym),
    }
}

/// Per-output accumulator specialised to the symbol structure, shared by the
/// direct route and the shell diagnostics so both sum identical terms.
///
/// The key identity: with M_ijk(xi) = -i xi_i P_jk(xi) (Leray), the triple
/// sum collapses to out = -i P(xi) a where a_j = sum_q (xi . u(q)) v_j(xi-q).
/// Accumulating a_j costs a handful of flops per pair instead of 27.
pub(crate) enum PairAcc {
    Zero,
    Worst {
        norm: f64,
        acc: Vec3,
    },
    Leray {
        xi: [f64; 3],
        inv_nsq: f64,
        acc: Vec3,
    },
}

impl PairAcc {
    pub(crate) fn new(sym: &BilinearSymbol, xi: Frequency) -> Self {
        match sym.kind {
            SymbolKind::Zero => PairAcc::Zero,
            SymbolKind::WorstCaseScalar => PairAcc::Worst {
                norm: xi.norm(),
                acc: ZERO_VEC3,
            },
            SymbolKind::NavierStokesLeray => {
                let [x, y, z] = xi.components();
                PairAcc::Leray {
                    xi: [x as f64, y as f64, z as f64],
                    inv_nsq: 1.0 / xi.norm_sq() as f64,
                    acc: ZERO_VEC3,
                }
            }
        }
    }

    /// Folds in one admissible pair: u at q, v at xi - q.
    #[inline(always)]
    pub(crate) fn add(&mut self, u: &Vec3, v: &Vec3) {
        match self {
            PairAcc::Zero => {}
            PairAcc::Worst { acc, .. } => {
                acc[0] += u[0] * v[0];
                acc[1] += u[1] * v[1];
                acc[2] += u[2] * v[2];
            }
            PairAcc::Leray { xi, acc, .. } => {
                let s = u[0] * xi[0] + u[1] * xi[1] + u[2] * xi[2];
                acc[0] += s * v[0];
                acc[1] += s * v[1];
                acc[2] += s * v[2];
            }
        }
    }

    /// Applies the xi-dependent postfactor and returns the contracted value.
    pub(crate) fn finish(&self) -> Vec3 {
        match self {
            PairAcc::Zero => ZERO_VEC3,
            PairAcc::Worst { norm, acc } => [acc[0] * *norm, acc[1] * *norm, acc[2] * *norm],
            PairAcc::Leray { xi, inv_nsq, acc } => {
                let dot = acc[0] * xi[0] + acc[1] * xi[1] + acc[2] * xi[2];
                let mut out = ZERO_VEC3;
                for k in 0..3 {
                    let p = acc[k] - dot * (xi[k] * *inv_nsq);
                    // multiply by -i
                    out[k] = Complex64::new(p.im, -p.re);
                }
                out
            }
        }
    }
}

/// Zero-filled dense lookup table over the bounding cube of the ball;
/// absent modes read as exact zeros.
struct DenseField {
    b: i64,
    dim: i64,
    data: Vec<Vec3>,
}

impl DenseField {
    fn build(f: &SpectralField) -> Self {
        let b = f.radius().floor() as i64;
        let dim = 2 * b + 1;
        let mut data = vec![ZERO_VEC3; (dim * dim * dim) as usize];
        for (xi, v) in f.iter() {
            let [x, y, z] = xi.components();
            let idx = ((x + b) * dim + (y + b)) * dim + (z + b);
            data[idx as usize] = *v;
        }
        DenseField { b, dim, data }
    }

    #[inline(always)]
    fn get(&self, x: i64, y: i64, z: i64) -> &Vec3 {
        let idx = ((x + self.b) * self.dim + (y + self.b)) * self.dim + (z + self.b);
        &self.data[idx as usize]
    }
}

fn check_radii(u: &SpectralField, v: &SpectralField) -> Result<f64, ConvError> {
    if u.radius() != v.radius() {
        return Err(ConvError::RadiusMismatch {
            left: u.radius(),
            right: v.radius(),
        });
    }
    Ok(u.radius())
}

/// Assembles a field from per-output values, pruning exact zeros.
fn collect_output(r: f64, outputs: &[Frequency], values: Vec<Vec3>) -> SpectralField {
    let mut out = SpectralField::new(r);
    for (xi, v) in outputs.iter().zip(values) {
        if v != ZERO_VEC3 {
            out.insert(*xi, v);
        }
    }
    out
}

/// Direct summation over admissible q; the oracle route.
pub fn bilinear_direct(
    u: &SpectralField,
    v: &SpectralField,
    sym: &BilinearSymbol,
) -> Result<SpectralField, ConvError> {
    let r = check_radii(u, v)?;
    if sym.is_zero() || u.is_empty() || v.is_empty() {
        return Ok(SpectralField::new(r));
    }
    let r_sq = (r * r).floor() as i64; // |q|^2 <= r_sq iff |q| <= r, exactly
    let vtab = DenseField::build(v);
    let b = vtab.b;
    let uvec: Vec<([i64; 3], Vec3)> = u.iter().map(|(q, val)| (q.components(), *val)).collect();
    let outputs = modes_in_ball(r);

    let values: Vec<Vec3> = outputs
        .par_iter()
        .map(|xi| {
            let [ox, oy, oz] = xi.components();
            let mut acc = PairAcc::new(sym, *xi);
            for (q, uval) in &uvec {
                // Partner mode xi - q must be a nonzero mode inside the ball.
                let px = ox - q[0];
                let py = oy - q[1];
                let pz = oz - q[2];
                if px.abs() > b || py.abs() > b || pz.abs() > b {
                    continue;
                }
                let pn = px * px + py * py + pz * pz;
                if pn == 0 || pn > r_sq {
                    continue;
                }
                acc.add(uval, vtab.get(px, py, pz));
            }
            acc.finish()
        })
        .collect();

    Ok(collect_output(r, &outputs, values))
}

/// Smallest 5-smooth integer >= n; rustfft is fastest on such sizes.
fn next_smooth(n: usize) -> usize {
    'outer: for m in n.. {
        let mut k = m;
        for p in [2, 3, 5] {
            while k % p == 0 {
                k /= p;
            }
        }
        if k == 1 {
            return m;
        }
        if m > 4 * n {
            break 'outer;
        }
    }
    unreachable!("a 5-smooth number exists below 4n")
}

/// Transform grid side for truncation radius r: supports live in
/// [-floor(r), floor(r)], their linear convolution in [-2 floor(r), 2 floor(r)],
/// so any side >= 4 floor(r) + 1 cannot wrap. ceil keeps the guarantee for
/// fractional radii.
pub fn fft_grid_side(r: f64) -> usize {
    next_smooth(4 * (r.ceil() as usize) + 1)
}

thread_local! {
    static PLAN_CACHE: RefCell<HashMap<usize, (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>> =
        RefCell::new(HashMap::new());
}

fn plans_for(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLAN_CACHE.with(|cache| {
        cache
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
            })
            .clone()
    })
}

/// In-place 3d transform, layout [x][y][z] with z contiguous.
fn fft3(data: &mut [Complex64], n: usize, plan: &Arc<dyn Fft<f64>>) {
    let mut scratch = vec![Complex64::ZERO; plan.get_inplace_scratch_len()];
    // z lines are contiguous: one batched call over all n^2 of them.
    plan.process_with_scratch(data, &mut scratch);
    // y and x lines are strided: gather, transform, scatter.
    let mut line = vec![Complex64::ZERO; n];
    for x in 0..n {
        for z in 0..n {
            for y in 0..n {
                line[y] = data[(x * n + y) * n + z];
            }
            plan.process_with_scratch(&mut line, &mut scratch);
            for y in 0..n {
                data[(x * n + y) * n + z] = line[y];
            }
        }
    }
    for y in 0..n {
        for z in 0..n {
            for x in 0..n {
                line[x] = data[(x * n + y) * n + z];
            }
            plan.process_with_scratch(&mut line, &mut scratch);
            for x in 0..n {
                data[(x * n + y) * n + z] = line[x];
            }
        }
    }
}

#[inline]
fn wrap_index(c: [i64; 3], n: usize) -> usize {
    let n_i = n as i64;
    let x = c[0].rem_euclid(n_i) as usize;
    let y = c[1].rem_euclid(n_i) as usize;
    let z = c[2].rem_euclid(n_i) as usize;
    (x * n + y) * n + z
}

/// FFT fast path; produces the same coefficients as [`bilinear_direct`].
pub fn bilinear_fft(
    u: &SpectralField,
    v: &SpectralField,
    sym: &BilinearSymbol,
) -> Result<SpectralField, ConvError> {
    let r = check_radii(u, v)?;
    if sym.is_zero() || u.is_empty() || v.is_empty() {
        return Ok(SpectralField::new(r));
    }
    let n = fft_grid_side(r);
    let n3 = n * n * n;
    let inv_n3 = 1.0 / n3 as f64;
    let (fwd, inv) = plans_for(n);
    let same_input = std::ptr::eq(u, v);

    // Physical-space samples of each component: unnormalized inverse DFT.
    let to_physical = |f: &SpectralField| -> [Vec<Complex64>; 3] {
        let mut bufs = [
            vec![Complex64::ZERO; n3],
            vec![Complex64::ZERO; n3],
            vec![Complex64::ZERO; n3],
        ];
        for (q, val) in f.iter() {
            let idx = wrap_index(q.components(), n);
            for comp in 0..3 {
                bufs[comp][idx] = val[comp];
            }
        }
        for buf in bufs.iter_mut() {
            fft3(buf, n, &inv);
        }
        bufs
    };

    let uphys = to_physical(u);
    let vphys = if same_input { None } else { Some(to_physical(v)) };
    let vphys_ref = vphys.as_ref().unwrap_or(&uphys);

    let outputs = modes_in_ball(r);
    // W_ij(xi) for each output mode, filled one (i, j) product at a time.
    let mut w: Vec<[[Complex64; 3]; 3]> = vec![[[Complex64::ZERO; 3]; 3]; outputs.len()];
    let mut prod = vec![Complex64::ZERO; n3];
    for i in 0..3 {
        // With u = v the product grid is symmetric in (i, j): W_ji = W_ij
        // after the q -> xi - q substitution, so only j >= i is transformed.
        let j_start = if same_input { i } else { 0 };
        for j in j_start..3 {
            for (p, (a, b)) in prod
                .iter_mut()
                .zip(uphys[i].iter().zip(vphys_ref[j].iter()))
            {
                *p = a * b;
            }
            fft3(&mut prod, n, &fwd);
            for (slot, xi) in w.iter_mut().zip(&outputs) {
                let val = prod[wrap_index(xi.components(), n)] * inv_n3;
                slot[i][j] = val;
                if same_input && i != j {
                    slot[j][i] = val;
                }
            }
        }
    }

    let values: Vec<Vec3> = outputs
        .iter()
        .zip(&w)
        .map(|(xi, wij)| contract_w(sym, *xi, wij))
        .collect();
    Ok(collect_output(r, &outputs, values))
}

/// Contraction of precomputed componentwise convolutions with the symbol:
/// out^k(xi) = sum_ij M_ijk(xi) W_ij(xi). Mirrors [`PairAcc::finish`].
fn contract_w(sym: &BilinearSymbol, xi: Frequency, w: &[[Complex64; 3]; 3]) -> Vec3 {
    match sym.kind {
        SymbolKind::Zero => ZERO_VEC3,
        SymbolKind::WorstCaseScalar => {
            let norm = xi.norm();
            [w[0][0] * norm, w[1][1] * norm, w[2][2] * norm]
        }
        SymbolKind::NavierStokesLeray => {
            let [x, y, z] = xi.components();
            let c = [x as f64, y as f64, z as f64];
            let inv_nsq = 1.0 / xi.norm_sq() as f64;
            // a_j = sum_i xi_i W_ij, then project and rotate by -i.
            let mut a = ZERO_VEC3;
            for j in 0..3 {
                a[j] = w[0][j] * c[0] + w[1][j] * c[1] + w[2][j] * c[2];
            }
            let dot = a[0] * c[0] + a[1] * c[1] + a[2] * c[2];
            let mut out = ZERO_VEC3;
            for k in 0..3 {
                let p = a[k] - dot * (c[k] * inv_nsq);
                out[k] = Complex64::new(p.im, -p.re);
            }
            out
        }
    }
}
