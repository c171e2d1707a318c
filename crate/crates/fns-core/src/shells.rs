//! Frequency-shell decompositions of the bilinear sum at one output mode.
//!
//! The quadratic term at xi is a sum over pairs (q, xi - q). Every a-priori
//! estimate in this project works the same way: split the q-lattice into a
//! handful of regions, bound each region by elementary means, and add the
//! pieces. This module computes those per-region partial sums numerically so
//! the estimates can be checked instead of trusted.
//!
//! Three decompositions are implemented:
//!
//! - existence: three regions (I, II, III) behind the quadratic bound
//!   |B(u, u)(xi)| <= c eps^2 for phi2-small data;
//! - regularity: six regions behind the decay-upgrade step of the bootstrap,
//!   with its aggregate constant 28;
//! - smoothing: eight regions (I_a .. IV_b) behind the extra-decay estimate,
//!   whose content is a decay *rate* in |xi| rather than a single constant.
//!
//! Each classifier is a deterministic precedence chain over exact integer
//! comparisons of squared norms (thresholds that arrive as reals are squared
//! once and compared against exact integers), so region membership is
//! reproducible and the partition property is trivially testable by
//! enumeration. Boundary conventions are fixed: |q| = 2|xi| belongs to the
//! high region, |xi - q| = |xi|/2 to region I, and ties |q| = |xi - q| in
//! the comparable-frequency block go to III_a.

use crate::conv::PairAcc;
use crate::field::{vec3_sup, Frequency, SpectralField};
use crate::fit::linear_fit;
use crate::report::CheckRecord;
use crate::sums::{modes_in_ball, TreeSum};
use crate::symbol::BilinearSymbol;

/// Cap for the universal constant in the quadratic bound
/// |B(u, u)(xi)| <= c eps^2 over phi2-small fields.
///
/// Provenance: the exact worst case over saturating fields u(q) = eps/|q|^2
/// with both factors confined to balls up to R = 32 peaks near 25.6 (around
/// xi = (4, 4, 4)) and falls off for larger |xi|. 26 leaves headroom for
/// rounding while staying sharp enough that a genuine regression trips it.
pub const EXISTENCE_CONSTANT_CAP: f64 = 26.0;

/// Aggregate constant of the six-region decay-upgrade estimate; the chain of
/// per-region bounds sums to 28 (4 + 4 + 4 + 12 + 4), which is where the
/// admissibility threshold eps < 1/28 comes from.
pub const REGULARITY_AGGREGATE_CONSTANT: f64 = 28.0;

/// Relative slack for hypothesis checks on stored coefficients, so a field
/// built to saturate a bound with the same arithmetic passes it.
const HYPOTHESIS_SLACK: f64 = 1.0 + 1e-12;

// ---------------------------------------------------------------------------
// Region classifiers
// ---------------------------------------------------------------------------

/// Regions of the quadratic-bound estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExistenceRegion {
    /// |q| < 2|xi| and |xi - q| <= |xi|/2: the partner carries the high mode.
    I,
    /// |q| < 2|xi| and |xi - q| > |xi|/2: both factors comparable.
    II,
    /// |q| >= 2|xi|: q carries the high mode (boundary included here).
    III,
}

impl ExistenceRegion {
    pub fn index(self) -> usize {
        match self {
            ExistenceRegion::I => 0,
            ExistenceRegion::II => 1,
            ExistenceRegion::III => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ExistenceRegion::I => "I",
            ExistenceRegion::II => "II",
            ExistenceRegion::III => "III",
        }
    }
}

/// None exactly when q = xi (the partner mode would be zero).
pub fn classify_existence(xi: Frequency, q: Frequency) -> Option<ExistenceRegion> {
    let p = xi.checked_sub(q)?;
    let nxi = xi.norm_sq();
    if q.norm_sq() >= 4 * nxi {
        return Some(ExistenceRegion::III);
    }
    if 4 * p.norm_sq() <= nxi {
        return Some(ExistenceRegion::I);
    }
    Some(ExistenceRegion::II)
}

/// Leaf regions of the decay-upgrade estimate. The outer split is by |q|
/// against the two cutoffs; the middle band is sub-split by where the
/// partner sits relative to k_m.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegularityRegion {
    /// 1 <= |q| < k_minus1.
    Low,
    /// k_minus1 <= |q| < k_m.
    Mid,
    /// k_m <= |q| < |xi|/2.
    UpperLow,
    /// |xi|/2 <= |q| < 2|xi| with |xi - q| >= k_m.
    BandFar,
    /// |xi|/2 <= |q| < 2|xi| with |xi - q| < k_m.
    BandNear,
    /// |q| >= 2|xi|.
    High,
}

impl RegularityRegion {
    pub fn index(self) -> usize {
        match self {
            RegularityRegion::Low => 0,
            RegularityRegion::Mid => 1,
            RegularityRegion::UpperLow => 2,
            RegularityRegion::BandFar => 3,
            RegularityRegion::BandNear => 4,
            RegularityRegion::High => 5,
        }
    }

    /// Index of the enclosing coarse region: below k_minus1, between the
    /// cutoffs, or at and above k_m.
    pub fn outer_index(self) -> usize {
        match self {
            RegularityRegion::Low => 0,
            RegularityRegion::Mid => 1,
            _ => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RegularityRegion::Low => "low",
            RegularityRegion::Mid => "mid",
            RegularityRegion::UpperLow => "upper-low",
            RegularityRegion::BandFar => "band-far",
            RegularityRegion::BandNear => "band-near",
            RegularityRegion::High => "high",
        }
    }
}

/// None exactly when q = xi. The chain is total, so every other q lands in
/// exactly one leaf; when the cutoffs are large relative to |xi| the |q|
/// thresholds win over the band geometry, which is the documented behavior
/// (the report's geometry flag marks when |xi| >= 2 k_m fails).
pub fn classify_regularity(
    xi: Frequency,
    q: Frequency,
    k_minus1: f64,
    k_m: f64,
) -> Option<RegularityRegion> {
    let p = xi.checked_sub(q)?;
    let nq = q.norm_sq();
    let nxi = xi.norm_sq();
    if (nq as f64) < k_minus1 * k_minus1 {
        return Some(RegularityRegion::Low);
    }
    if (nq as f64) < k_m * k_m {
        return Some(RegularityRegion::Mid);
    }
    if 4 * nq < nxi {
        return Some(RegularityRegion::UpperLow);
    }
    if nq >= 4 * nxi {
        return Some(RegularityRegion::High);
    }
    if (p.norm_sq() as f64) >= k_m * k_m {
        Some(RegularityRegion::BandFar)
    } else {
        Some(RegularityRegion::BandNear)
    }
}

/// Regions of the extra-decay estimate. The a-regions see a small |q|, the
/// b-regions a small partner |xi - q|, and the III/IV block holds the
/// comparable and very-high frequencies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmoothingRegion {
    /// |q| <= |xi|/2 and |q| <= sqrt|xi|.
    Ia,
    /// |q| <= |xi|/2 and |q| > sqrt|xi|.
    IIa,
    /// Both factors above |xi|/2, neither above 2|xi|, |q| <= |xi - q|.
    IIIa,
    /// Both factors above |xi|/2 and |xi - q| >= 2|xi|.
    IVa,
    /// |q| > |xi|/2, |xi - q| <= |xi|/2 and |xi - q| <= sqrt|xi|.
    Ib,
    /// |q| > |xi|/2, |xi - q| <= |xi|/2 and |xi - q| > sqrt|xi|.
    IIb,
    /// Both factors above |xi|/2, neither above 2|xi|, |q| > |xi - q|.
    IIIb,
    /// Both factors above |xi|/2, |xi - q| < 2|xi| <= |q|.
    IVb,
}

pub const SMOOTHING_REGIONS: [SmoothingRegion; 8] = [
    SmoothingRegion::Ia,
    SmoothingRegion::IIa,
    SmoothingRegion::IIIa,
    SmoothingRegion::IVa,
    SmoothingRegion::Ib,
    SmoothingRegion::IIb,
    SmoothingRegion::IIIb,
    SmoothingRegion::IVb,
];

impl SmoothingRegion {
    pub fn index(self) -> usize {
        match self {
            SmoothingRegion::Ia => 0,
            SmoothingRegion::IIa => 1,
            SmoothingRegion::IIIa => 2,
            SmoothingRegion::IVa => 3,
            SmoothingRegion::Ib => 4,
            SmoothingRegion::IIb => 5,
            SmoothingRegion::IIIb => 6,
            SmoothingRegion::IVb => 7,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SmoothingRegion::Ia => "Ia",
            SmoothingRegion::IIa => "IIa",
            SmoothingRegion::IIIa => "IIIa",
            SmoothingRegion::IVa => "IVa",
            SmoothingRegion::Ib => "Ib",
            SmoothingRegion::IIb => "IIb",
            SmoothingRegion::IIIb => "IIIb",
            SmoothingRegion::IVb => "IVb",
        }
    }
}

/// Claimed decay rate of a prefactored part in |xi|: part ~ |xi|^(-rate).
/// I-family: 1/2 + eta; II-family: (3/2) eta; III and IV families: 2 eta.
pub fn claimed_smoothing_rate(region: SmoothingRegion, eta: f64) -> f64 {
    match region {
        SmoothingRegion::Ia | SmoothingRegion::Ib => 0.5 + eta,
        SmoothingRegion::IIa | SmoothingRegion::IIb => 1.5 * eta,
        _ => 2.0 * eta,
    }
}

/// None exactly when q = xi.
///
/// Chain order: a-side low block (|q| <= |xi|/2, sub-split at sqrt|xi|),
/// then b-side low block on the partner, then the comparable block split
/// into IV_a (partner at or beyond 2|xi|), IV_b (q at or beyond 2|xi|), and
/// III_a / III_b by which factor is smaller. |q| <= sqrt|xi| is decided as
/// |q|^4 <= |xi|^2 in integers (i128: fourth powers overflow i64 first).
pub fn classify_smoothing(xi: Frequency, q: Frequency) -> Option<SmoothingRegion> {
    let p = xi.checked_sub(q)?;
    let nq = q.norm_sq();
    let np = p.norm_sq();
    let nxi = xi.norm_sq();
    if 4 * nq <= nxi {
        return Some(if (nq as i128) * (nq as i128) <= nxi as i128 {
            SmoothingRegion::Ia
        } else {
            SmoothingRegion::IIa
        });
    }
    if 4 * np <= nxi {
        return Some(if (np as i128) * (np as i128) <= nxi as i128 {
            SmoothingRegion::Ib
        } else {
            SmoothingRegion::IIb
        });
    }
    if np >= 4 * nxi {
        return Some(SmoothingRegion::IVa);
    }
    if nq >= 4 * nxi {
        return Some(SmoothingRegion::IVb);
    }
    Some(if nq <= np {
        SmoothingRegion::IIIa
    } else {
        SmoothingRegion::IIIb
    })
}

// ---------------------------------------------------------------------------
// Existence diagnostics
// ---------------------------------------------------------------------------

/// Per-region split of the quadratic term at one frequency, against the
/// universal-constant claim.
#[derive(Clone, Debug)]
pub struct ShellReportExistence {
    pub xi: Frequency,
    /// Sup over output components of |partial sum of B(u, u)(xi)| restricted
    /// to each region; the symbol contraction (with cancellation) included.
    pub part_i: f64,
    pub part_ii: f64,
    pub part_iii: f64,
    /// EXISTENCE_CONSTANT_CAP * eps^2.
    pub claimed_bound: f64,
    /// (part_i + part_ii + part_iii) / eps^2.
    pub effective_c: f64,
    pub eps: f64,
    /// phi2_norm(u), echoed for the hypothesis record.
    pub phi2: f64,
    /// phi2_norm(u) <= eps; the parts are meaningful regardless, but the
    /// constant claim presumes this.
    pub hypothesis_ok: bool,
    /// Modes of the ball in each region (partner inside or not).
    pub region_counts: [usize; 3],
    /// Modes of the ball with q != xi; the counts must sum to this.
    pub admissible_count: usize,
}

impl ShellReportExistence {
    pub fn parts(&self) -> [f64; 3] {
        [self.part_i, self.part_ii, self.part_iii]
    }

    /// One record per region plus the constant and hypothesis checks. Under
    /// the phi2 hypothesis each region's contracted sum is itself below the
    /// cap (the saturating field dominates pointwise), so the per-region
    /// bound is the same cap.
    pub fn records(&self) -> Vec<CheckRecord> {
        let inputs = format!("xi={} eps={:.3e}", self.xi, self.eps);
        let mut out = Vec::with_capacity(5);
        for (label, part) in ["I", "II", "III"].iter().zip(self.parts()) {
            out.push(CheckRecord::le(
                format!("existence-shell/{label}"),
                "region partial sum of the quadratic term",
                inputs.clone(),
                part,
                self.claimed_bound,
            ));
        }
        out.push(CheckRecord::le(
            "existence-shell/constant",
            "measured quadratic constant against the cap",
            inputs.clone(),
            self.effective_c,
            EXISTENCE_CONSTANT_CAP,
        ));
        out.push(CheckRecord::le(
            "existence-shell/hypothesis",
            "phi2 norm of the input against eps",
            inputs,
            self.phi2,
            self.eps,
        ));
        out
    }
}

/// Splits B(u, u)(xi) into the three-region partial sums and measures the
/// constant of the quadratic bound. eps must be positive; xi = 0 is
/// unrepresentable by construction.
pub fn shell_diagnostics_existence(
    u: &SpectralField,
    sym: &BilinearSymbol,
    xi: Frequency,
    eps: f64,
) -> ShellReportExistence {
    assert!(eps > 0.0, "eps must be positive");
    let mut accs = [
        PairAcc::new(sym, xi),
        PairAcc::new(sym, xi),
        PairAcc::new(sym, xi),
    ];
    for (q, uval) in u.iter() {
        let Some(region) = classify_existence(xi, q) else {
            continue;
        };
        let Some(p) = xi.checked_sub(q) else {
            continue;
        };
        let pval = u.get(p);
        accs[region.index()].add(uval, &pval);
    }
    let parts = [
        vec3_sup(&accs[0].finish()),
        vec3_sup(&accs[1].finish()),
        vec3_sup(&accs[2].finish()),
    ];

    let mut region_counts = [0usize; 3];
    let mut admissible_count = 0usize;
    for q in modes_in_ball(u.radius()) {
        if let Some(region) = classify_existence(xi, q) {
            region_counts[region.index()] += 1;
            admissible_count += 1;
        }
    }

    let phi2 = u.phi2_norm();
    ShellReportExistence {
        xi,
        part_i: parts[0],
        part_ii: parts[1],
        part_iii: parts[2],
        claimed_bound: EXISTENCE_CONSTANT_CAP * eps * eps,
        effective_c: (parts[0] + parts[1] + parts[2]) / (eps * eps),
        eps,
        phi2,
        hypothesis_ok: phi2 <= eps * HYPOTHESIS_SLACK,
        region_counts,
        admissible_count,
    }
}

// ---------------------------------------------------------------------------
// Regularity diagnostics
// ---------------------------------------------------------------------------

/// Six-region split of the absolute quadratic sum behind one bootstrap
/// upgrade step, with the aggregate-constant and conclusion checks.
#[derive(Clone, Debug)]
pub struct ShellReportRegularity {
    pub xi: Frequency,
    /// Region sums of max_i |u(q)| * max_j |u(xi - q)|, without the symbol
    /// prefactor; indexed by [`RegularityRegion::index`].
    pub parts: [f64; 6],
    /// sup_ijk |M(xi)|, the factor the estimate pulls out front.
    pub prefactor: f64,
    /// prefactor * sum of parts: the bound on |B(u, u)(xi)| this route gives.
    pub total: f64,
    /// eps^(2 mu_m - 1), the decay level the step must reach.
    pub conclusion_bound: f64,
    pub conclusion_ok: bool,
    /// total / eps^(2 mu_m), to compare against the aggregate constant.
    pub measured_constant: f64,
    pub constant_ok: bool,
    /// |xi| >= 2 k_m; the geometric facts behind the region estimates need
    /// it, so the report flags probes outside that range.
    pub geometry_ok: bool,
    /// Worst of max_k |u(q)| |q|^2 / eps over |q| >= k_minus1 (0 if none).
    pub hypothesis_eps_excess: f64,
    pub hypothesis_eps_ok: bool,
    /// Worst of max_k |u(q)| |q|^2 / eps^mu_m over |q| >= k_m (0 if none).
    pub hypothesis_mu_excess: f64,
    pub hypothesis_mu_ok: bool,
    pub eps: f64,
    pub mu_m: f64,
    pub k_minus1: f64,
    pub k_m: f64,
    pub region_counts: [usize; 6],
    /// Counts of the coarse split (below k_minus1 / between / above), which
    /// must sum to admissible_count.
    pub outer_counts: [usize; 3],
    pub admissible_count: usize,
}

impl ShellReportRegularity {
    /// One record per region (its prefactored contribution against the
    /// conclusion level), then the conclusion, the aggregate constant, the
    /// geometry, and the two decay hypotheses.
    pub fn records(&self) -> Vec<CheckRecord> {
        let inputs = format!(
            "xi={} eps={:.3e} mu_m={} k_minus1={:.3e} k_m={:.3e}",
            self.xi, self.eps, self.mu_m, self.k_minus1, self.k_m
        );
        let mut out = Vec::with_capacity(11);
        let labels = ["low", "mid", "upper-low", "band-far", "band-near", "high"];
        for (label, part) in labels.iter().zip(self.parts) {
            out.push(CheckRecord::le(
                format!("regularity-shell/{label}"),
                "prefactored region sum against the conclusion level",
                inputs.clone(),
                self.prefactor * part,
                self.conclusion_bound,
            ));
        }
        out.push(CheckRecord::le(
            "regularity-shell/conclusion",
            "upgraded decay level at this frequency",
            inputs.clone(),
            self.total,
            self.conclusion_bound,
        ));
        out.push(CheckRecord::le(
            "regularity-shell/constant",
            "measured aggregate constant",
            inputs.clone(),
            self.measured_constant,
            REGULARITY_AGGREGATE_CONSTANT,
        ));
        out.push(CheckRecord::le(
            "regularity-shell/geometry",
            "2 k_m against |xi| (probe inside the estimate's range)",
            inputs.clone(),
            2.0 * self.k_m,
            self.xi.norm(),
        ));
        out.push(CheckRecord::le(
            "regularity-shell/hypothesis-eps",
            "worst |u| |q|^2 / eps above k_minus1",
            inputs.clone(),
            self.hypothesis_eps_excess,
            1.0,
        ));
        out.push(CheckRecord::le(
            "regularity-shell/hypothesis-mu",
            "worst |u| |q|^2 / eps^mu_m above k_m",
            inputs,
            self.hypothesis_mu_excess,
            1.0,
        ));
        out
    }
}

/// Runs the six-region decay-upgrade diagnostic at one frequency.
///
/// Requires eps > 0 and k_minus1 <= k_m. mu_m enters only through the
/// normalizations eps^mu_m and eps^(2 mu_m).
pub fn shell_diagnostics_regularity(
    u: &SpectralField,
    sym: &BilinearSymbol,
    xi: Frequency,
    k_minus1: f64,
    k_m: f64,
    eps: f64,
    mu_m: f64,
) -> ShellReportRegularity {
    assert!(eps > 0.0, "eps must be positive");
    assert!(
        k_minus1 <= k_m,
        "cutoffs must be ordered: k_minus1 <= k_m"
    );
    let eps_mu = eps.powf(mu_m);

    let mut sums: [TreeSum; 6] = Default::default();
    let mut eps_excess = 0.0f64;
    let mut mu_excess = 0.0f64;
    for (q, uval) in u.iter() {
        let s = vec3_sup(uval);
        let nq = q.norm_sq() as f64;
        if nq >= k_minus1 * k_minus1 {
            eps_excess = eps_excess.max(s * nq / eps);
        }
        if nq >= k_m * k_m {
            mu_excess = mu_excess.max(s * nq / eps_mu);
        }
        let Some(region) = classify_regularity(xi, q, k_minus1, k_m) else {
            continue;
        };
        let Some(p) = xi.checked_sub(q) else {
            continue;
        };
        let partner = vec3_sup(&u.get(p));
        if partner != 0.0 && s != 0.0 {
            sums[region.index()].push(s * partner);
        }
    }
    let parts = sums.map(TreeSum::total);

    let mut region_counts = [0usize; 6];
    let mut outer_counts = [0usize; 3];
    let mut admissible_count = 0usize;
    for q in modes_in_ball(u.radius()) {
        if let Some(region) = classify_regularity(xi, q, k_minus1, k_m) {
            region_counts[region.index()] += 1;
            outer_counts[region.outer_index()] += 1;
            admissible_count += 1;
        }
    }

    let prefactor = sym.sup_abs(xi);
    let total = prefactor * parts.iter().sum::<f64>();
    let conclusion_bound = eps.powf(2.0 * mu_m - 1.0);
    let measured_constant = total / (eps_mu * eps_mu);
    ShellReportRegularity {
        xi,
        parts,
        prefactor,
        total,
        conclusion_bound,
        conclusion_ok: total <= conclusion_bound,
        measured_constant,
        constant_ok: measured_constant <= REGULARITY_AGGREGATE_CONSTANT,
        geometry_ok: xi.norm_sq() as f64 >= 4.0 * k_m * k_m,
        hypothesis_eps_excess: eps_excess,
        hypothesis_eps_ok: eps_excess <= HYPOTHESIS_SLACK,
        hypothesis_mu_excess: mu_excess,
        hypothesis_mu_ok: mu_excess <= HYPOTHESIS_SLACK,
        eps,
        mu_m,
        k_minus1,
        k_m,
        region_counts,
        outer_counts,
        admissible_count,
    }
}

// ---------------------------------------------------------------------------
// Smoothing diagnostics
// ---------------------------------------------------------------------------

/// Eight-region split of the absolute quadratic sum behind the extra-decay
/// estimate. The parts carry the symbol prefactor, because the claimed decay
/// rates are about the prefactored quantities.
#[derive(Clone, Debug)]
pub struct ShellReportSmoothing {
    pub xi: Frequency,
    /// sup_ijk |M(xi)| times the region sum of max_i |u(q)| *
    /// max_j |u(xi - q)|; indexed by [`SmoothingRegion::index`].
    pub parts: [f64; 8],
    pub eta: f64,
    pub d: f64,
    pub prefactor: f64,
    /// Worst of max_k |u(q)| |q|^(2 + eta) / D over the support (0 if empty).
    pub hypothesis_excess: f64,
    /// |u(q)| <= D / |q|^(2 + eta) everywhere.
    pub hypothesis_ok: bool,
    pub region_counts: [usize; 8],
    pub admissible_count: usize,
}

impl ShellReportSmoothing {
    /// One record per region against the displayed closed-form bound
    /// 2^(2 + eta) D^2 |xi|^(-rate). Those displayed constants are known to
    /// be optimistic for the II and IV families on the actual lattice, so
    /// failing region records here are findings, not errors; the load-bearing
    /// check is the fitted rate across several |xi| (see
    /// [`smoothing_rate_fit`]).
    pub fn records(&self) -> Vec<CheckRecord> {
        let inputs = format!("xi={} eta={:.3e} D={:.3e}", self.xi, self.eta, self.d);
        let nxi = self.xi.norm();
        let constant = 2.0f64.powf(2.0 + self.eta) * self.d * self.d;
        let mut out = Vec::with_capacity(9);
        for region in SMOOTHING_REGIONS {
            let rate = claimed_smoothing_rate(region, self.eta);
            out.push(CheckRecord::le(
                format!("smoothing-shell/{}", region.label()),
                "prefactored region sum against its displayed closed form",
                inputs.clone(),
                self.parts[region.index()],
                constant * nxi.powf(-rate),
            ));
        }
        out.push(CheckRecord::le(
            "smoothing-shell/hypothesis",
            "worst |u| |q|^(2+eta) / D over the support",
            inputs,
            self.hypothesis_excess,
            1.0,
        ));
        out
    }
}

/// Runs the eight-region extra-decay diagnostic at one frequency. Requires
/// d > 0 and eta > 0.
pub fn shell_diagnostics_smoothing(
    u: &SpectralField,
    sym: &BilinearSymbol,
    xi: Frequency,
    d: f64,
    eta: f64,
) -> ShellReportSmoothing {
    assert!(d > 0.0, "decay prefactor D must be positive");
    assert!(eta > 0.0, "decay exponent eta must be positive");

    let mut sums: [TreeSum; 8] = Default::default();
    let mut excess = 0.0f64;
    for (q, uval) in u.iter() {
        let s = vec3_sup(uval);
        excess = excess.max(s * (q.norm_sq() as f64).powf(1.0 + eta / 2.0) / d);
        let Some(region) = classify_smoothing(xi, q) else {
            continue;
        };
        let Some(p) = xi.checked_sub(q) else {
            continue;
        };
        let partner = vec3_sup(&u.get(p));
        if partner != 0.0 && s != 0.0 {
            sums[region.index()].push(s * partner);
        }
    }

    let mut region_counts = [0usize; 8];
    let mut admissible_count = 0usize;
    for q in modes_in_ball(u.radius()) {
        if let Some(region) = classify_smoothing(xi, q) {
            region_counts[region.index()] += 1;
            admissible_count += 1;
        }
    }

    let prefactor = sym.sup_abs(xi);
    let parts = sums.map(|s| prefactor * s.total());
    ShellReportSmoothing {
        xi,
        parts,
        eta,
        d,
        prefactor,
        hypothesis_excess: excess,
        hypothesis_ok: excess <= HYPOTHESIS_SLACK,
        region_counts,
        admissible_count,
    }
}

/// Fitted |xi|-decay exponent of one smoothing part across several reports.
#[derive(Clone, Copy, Debug)]
pub struct SmoothingRateFit {
    pub region: SmoothingRegion,
    /// Minus the log-log slope; None when fewer than two reports have a
    /// positive part (an empty region cannot be fitted).
    pub measured: Option<f64>,
    pub claimed: f64,
    /// Max absolute log-residual of the fit (0 when measured is None).
    pub fit_residual: f64,
}

/// Fits part ~ C |xi|^(-rate) for each region over a set of reports taken at
/// different frequencies. All reports must share eta (and should share the
/// field and symbol; the caller owns that).
pub fn smoothing_rate_fit(reports: &[ShellReportSmoothing]) -> Vec<SmoothingRateFit> {
    assert!(reports.len() >= 2, "rate fit needs at least two frequencies");
    let eta = reports[0].eta;
    assert!(
        reports.iter().all(|r| r.eta == eta),
        "reports mix different eta values"
    );
    SMOOTHING_REGIONS
        .iter()
        .map(|&region| {
            let points: Vec<(f64, f64)> = reports
                .iter()
                .filter(|r| r.parts[region.index()] > 0.0)
                .map(|r| (r.xi.norm().ln(), r.parts[region.index()].ln()))
                .collect();
            let claimed = claimed_smoothing_rate(region, eta);
            if points.len() < 2 {
                SmoothingRateFit {
                    region,
                    measured: None,
                    claimed,
                    fit_residual: 0.0,
                }
            } else {
                let (slope, _, resid) = linear_fit(&points);
                SmoothingRateFit {
                    region,
                    measured: Some(-slope),
                    claimed,
                    fit_residual: resid,
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Frequency;
    use crate::sums::ball_mode_count;
    use crate::symbol::{BilinearSymbol, SymbolKind};
    use num_complex::Complex64;

    fn xyz(x: i64, y: i64, z: i64) -> Frequency {
        Frequency::xyz(x, y, z)
    }

    /// u(q) = amp(|q|^2) in every component, real, over the closed ball.
    fn radial_field(r: f64, amp: impl Fn(f64) -> f64) -> SpectralField {
        let mut u = SpectralField::new(r);
        for q in modes_in_ball(r) {
            let a = amp(q.norm_sq() as f64);
            let c = Complex64::new(a, 0.0);
            u.insert(q, [c, c, c]);
        }
        u
    }

    #[test]
    fn existence_classifier_boundaries() {
        // q = xi has no partner mode.
        assert_eq!(classify_existence(xyz(3, 1, 0), xyz(3, 1, 0)), None);
        // |q| = 2|xi| goes to the high region.
        assert_eq!(
            classify_existence(xyz(1, 0, 0), xyz(2, 0, 0)),
            Some(ExistenceRegion::III)
        );
        // |xi - q| = |xi|/2 goes to region I.
        assert_eq!(
            classify_existence(xyz(2, 0, 0), xyz(1, 0, 0)),
            Some(ExistenceRegion::I)
        );
        // Generic comparable pair.
        assert_eq!(
            classify_existence(xyz(2, 0, 0), xyz(0, 1, 1)),
            Some(ExistenceRegion::II)
        );
    }

    #[test]
    fn smoothing_classifier_boundaries() {
        assert_eq!(classify_smoothing(xyz(1, 1, 1), xyz(1, 1, 1)), None);
        // |q| = sqrt|xi|: xi = (4,0,0), |q| = 2.
        assert_eq!(
            classify_smoothing(xyz(4, 0, 0), xyz(2, 0, 0)),
            Some(SmoothingRegion::Ia)
        );
        // sqrt|xi| < |q| <= |xi|/2: for xi = (8,0,0) that is 2.83 < |q| <= 4.
        assert_eq!(
            classify_smoothing(xyz(8, 0, 0), xyz(3, 0, 0)),
            Some(SmoothingRegion::IIa)
        );
        // Partner tiny: b-side takes it.
        assert_eq!(
            classify_smoothing(xyz(8, 0, 0), xyz(7, 0, 0)),
            Some(SmoothingRegion::Ib)
        );
        assert_eq!(
            classify_smoothing(xyz(8, 0, 0), xyz(5, 1, 0)),
            Some(SmoothingRegion::IIb)
        );
        // Comparable block, exact tie |q| = |xi - q| goes to IIIa.
        assert_eq!(
            classify_smoothing(xyz(4, 0, 0), xyz(2, 1, 0)),
            Some(SmoothingRegion::IIIa)
        );
        // nq = 13 > np = 5, both factors above |xi|/2: the larger-q side.
        assert_eq!(
            classify_smoothing(xyz(4, 0, 0), xyz(3, 2, 0)),
            Some(SmoothingRegion::IIIb)
        );
        // |xi - q| = 2|xi| boundary goes to IVa; q beyond 2|xi| to IVb.
        assert_eq!(
            classify_smoothing(xyz(1, 0, 0), xyz(-1, 0, 0)),
            Some(SmoothingRegion::IVa)
        );
        assert_eq!(
            classify_smoothing(xyz(1, 0, 0), xyz(2, 0, 0)),
            Some(SmoothingRegion::IVb)
        );
    }

    #[test]
    fn regularity_classifier_respects_cutoffs_and_band() {
        let xi = xyz(8, 0, 0);
        let (k1, km) = (2.0, 3.0);
        assert_eq!(classify_regularity(xi, xi, k1, km), None);
        assert_eq!(
            classify_regularity(xi, xyz(1, 0, 0), k1, km),
            Some(RegularityRegion::Low)
        );
        // |q| = k_minus1 belongs to mid (low is strict).
        assert_eq!(
            classify_regularity(xi, xyz(2, 0, 0), k1, km),
            Some(RegularityRegion::Mid)
        );
        // k_m <= |q| < |xi|/2.
        assert_eq!(
            classify_regularity(xi, xyz(3, 0, 0), k1, km),
            Some(RegularityRegion::UpperLow)
        );
        // |q| = |xi|/2 enters the band; partner far from xi.
        assert_eq!(
            classify_regularity(xi, xyz(4, 0, 0), k1, km),
            Some(RegularityRegion::BandFar)
        );
        // Band mode whose partner is below k_m.
        assert_eq!(
            classify_regularity(xi, xyz(7, 1, 0), k1, km),
            Some(RegularityRegion::BandNear)
        );
        // |q| = 2|xi| goes high.
        assert_eq!(
            classify_regularity(xi, xyz(16, 0, 0), k1, km),
            Some(RegularityRegion::High)
        );
    }

    #[test]
    fn partitions_cover_the_ball_exactly() {
        let r = 8.0;
        let total = ball_mode_count(r);
        for xi in [xyz(1, 0, 0), xyz(2, 2, 1), xyz(5, 0, 0), xyz(12, 3, 0)] {
            let in_ball = (xi.norm_sq() as f64) <= r * r;
            let expect = total - usize::from(in_ball);
            let mut ex = 0usize;
            let mut sm = 0usize;
            let mut rg = 0usize;
            for q in modes_in_ball(r) {
                ex += usize::from(classify_existence(xi, q).is_some());
                sm += usize::from(classify_smoothing(xi, q).is_some());
                rg += usize::from(classify_regularity(xi, q, 1.5, 4.0).is_some());
            }
            assert_eq!(ex, expect);
            assert_eq!(sm, expect);
            assert_eq!(rg, expect);
        }
    }

    #[test]
    fn existence_zero_field_and_zero_symbol_vanish() {
        let u = SpectralField::new(4.0);
        let sym = BilinearSymbol::new(SymbolKind::WorstCaseScalar);
        let rep = shell_diagnostics_existence(&u, &sym, xyz(2, 0, 0), 0.1);
        assert_eq!(rep.parts(), [0.0, 0.0, 0.0]);
        assert_eq!(rep.effective_c, 0.0);
        assert!(rep.hypothesis_ok);

        let sat = radial_field(4.0, |nq| 0.1 / nq);
        let zero = BilinearSymbol::new(SymbolKind::Zero);
        let rep = shell_diagnostics_existence(&sat, &zero, xyz(2, 0, 0), 0.1);
        assert_eq!(rep.parts(), [0.0, 0.0, 0.0]);
    }

    // Saturating field u(q) = eps/|q|^2 on the ball R = 8, worst-case
    // symbol: region sums have no cancellation, so the parts equal
    // |xi| * sum 1/(|q|^2 |xi - q|^2) over each region, eps^2 scaled out.
    // Values frozen from an independent brute-force enumeration.
    #[test]
    fn existence_parts_match_frozen_enumeration() {
        let u = radial_field(8.0, |nq| 1.0 / nq);
        let sym = BilinearSymbol::new(SymbolKind::WorstCaseScalar);
        let table: [(Frequency, [f64; 3], f64); 7] = [
            (xyz(1, 0, 0), [0.0, 6.206, 5.305], 11.51),
            (xyz(2, 0, 0), [3.822, 11.711, 3.245], 18.777),
            (xyz(2, 2, 1), [4.246, 14.217, 1.285], 19.748),
            (xyz(4, 0, 0), [4.258, 14.923, 0.004], 19.185),
            (xyz(4, 4, 0), [4.865, 11.597, 0.0], 16.462),
            (xyz(8, 0, 0), [2.692, 5.744, 0.0], 8.436),
            (xyz(5, 5, 5), [2.137, 4.419, 0.0], 6.556),
        ];
        for (xi, parts, c_star) in table {
            let rep = shell_diagnostics_existence(&u, &sym, xi, 1.0);
            for (got, want) in rep.parts().iter().zip(parts) {
                assert!(
                    (got - want).abs() <= 1e-3,
                    "xi={xi} parts {:?} vs {parts:?}",
                    rep.parts()
                );
            }
            assert!((rep.effective_c - c_star).abs() <= 2e-3, "xi={xi}");
            assert!(rep.effective_c <= EXISTENCE_CONSTANT_CAP);
            assert!(rep.hypothesis_ok, "saturating field sits at phi2 = eps");
            assert_eq!(
                rep.region_counts.iter().sum::<usize>(),
                rep.admissible_count
            );
        }
    }

    // Schedule-consistent cutoffs at R = 32: k_m = R eps^mu_m puts the whole
    // visible lattice above k_m, and the probe frequencies sit at or below
    // k_{m+1} = k_m eps^{-mu_m} = R. Constants frozen from the same
    // brute-force enumeration as the existence table.
    #[test]
    fn regularity_constant_stays_under_aggregate() {
        let eps = 0.05f64;
        let mu_m = 2.0f64;
        let eps_mu = eps * eps;
        let k_m = 32.0 * eps_mu;
        let k_minus1 = 0.5 * k_m;
        let u = radial_field(32.0, |nq| eps_mu / nq);
        let sym = BilinearSymbol::new(SymbolKind::WorstCaseScalar);

        let table = [
            (xyz(16, 0, 0), 22.571),
            (xyz(16, 16, 0), 18.882),
            (xyz(24, 0, 0), 17.952),
            (xyz(32, 0, 0), 9.735),
        ];
        for (xi, want) in table {
            let rep = shell_diagnostics_regularity(&u, &sym, xi, k_minus1, k_m, eps, mu_m);
            assert!(
                (rep.measured_constant - want).abs() <= 2e-3,
                "xi={xi}: {} vs {want}",
                rep.measured_constant
            );
            assert!(rep.constant_ok);
            assert!(rep.geometry_ok);
            assert!(rep.hypothesis_eps_ok && rep.hypothesis_mu_ok);
            // Sub-unit cutoffs leave the low and mid regions empty.
            assert_eq!(rep.parts[0], 0.0);
            assert_eq!(rep.parts[1], 0.0);
            assert_eq!(rep.outer_counts[0], 0);
            assert_eq!(rep.outer_counts[1], 0);
            assert_eq!(
                rep.outer_counts.iter().sum::<usize>(),
                rep.admissible_count
            );
            assert_eq!(
                rep.region_counts.iter().sum::<usize>(),
                rep.admissible_count
            );
        }

        // At the schedule frequency k_{m+1} = 32 the conclusion level holds:
        // 9.735 eps^{2 mu} <= eps^{2 mu - 1} needs the constant below 1/eps.
        let rep = shell_diagnostics_regularity(
            &u,
            &sym,
            xyz(32, 0, 0),
            k_minus1,
            k_m,
            eps,
            mu_m,
        );
        assert!(rep.conclusion_ok);
        // An interior probe below k_{m+1} can exceed 1/eps = 20 without
        // violating the aggregate constant; the estimate does not claim it.
        let rep = shell_diagnostics_regularity(
            &u,
            &sym,
            xyz(16, 0, 0),
            k_minus1,
            k_m,
            eps,
            mu_m,
        );
        assert!(!rep.conclusion_ok && rep.constant_ok);
    }

    #[test]
    fn regularity_hypothesis_flags_catch_violations() {
        let eps = 0.1;
        let mut u = radial_field(4.0, |nq| eps / nq);
        // One mode violating the mu-level bound above k_m.
        u.insert(xyz(3, 0, 0), [Complex64::new(1.0, 0.0); 3]);
        let sym = BilinearSymbol::new(SymbolKind::WorstCaseScalar);
        let rep = shell_diagnostics_regularity(&u, &sym, xyz(4, 0, 0), 1.0, 2.5, eps, 2.0);
        assert!(rep.hypothesis_eps_excess > 1.0);
        assert!(!rep.hypothesis_eps_ok);
        assert!(!rep.hypothesis_mu_ok);
    }

    // Field u(q) = 1/|q|^(2+eta) on the ball R = 64 with eta = 1/4: the
    // eight prefactored parts at xi = (8|16|32, 0, 0), frozen from an
    // independent enumeration (5 significant digits).
    #[test]
    fn smoothing_parts_match_frozen_enumeration() {
        let eta = 0.25f64;
        let u = radial_field(64.0, |nq| nq.powf(-(2.0 + eta) / 2.0));
        let sym = BilinearSymbol::new(SymbolKind::WorstCaseScalar);

        let table: [(Frequency, [f64; 8]); 3] = [
            (
                xyz(8, 0, 0),
                [1.7797, 0.85595, 2.2709, 0.97233, 1.7797, 0.84033, 1.678, 0.21644],
            ),
            (
                xyz(16, 0, 0),
                [1.0702, 1.0885, 1.4829, 0.49288, 1.0702, 1.0871, 1.2691, 0.15254],
            ),
            (
                xyz(32, 0, 0),
                [
                    0.63751, 1.0124, 1.0043, 1.1341e-6, 0.63751, 1.0123, 0.92833, 1.1341e-6,
                ],
            ),
        ];

        let mut reports = Vec::new();
        for (xi, want) in &table {
            let rep = shell_diagnostics_smoothing(&u, &sym, *xi, 1.0, eta);
            assert!(rep.hypothesis_ok);
            for (region, &w) in SMOOTHING_REGIONS.iter().zip(want) {
                let got = rep.parts[region.index()];
                assert!(
                    (got - w).abs() <= 1e-4 * w.abs().max(1e-12),
                    "xi={xi} region {}: {got} vs {w}",
                    region.label()
                );
            }
            assert_eq!(
                rep.region_counts.iter().sum::<usize>(),
                rep.admissible_count
            );
            reports.push(rep);
        }

        // Axis symmetry swaps q and xi - q bijectively, so the a- and
        // b-sides of family I coincide for this even field.
        for rep in &reports {
            let ia = rep.parts[SmoothingRegion::Ia.index()];
            let ib = rep.parts[SmoothingRegion::Ib.index()];
            assert!((ia - ib).abs() <= 1e-12 * ia.abs());
        }

        // Fitted rates across |xi| in {8, 16, 32}, frozen from the same
        // enumeration. Families I and III track their claimed rates within
        // the 0.15 margin; the II and IV families measurably do not on this
        // lattice (II is still growing toward its asymptotic regime, IV dies
        // at the truncation edge), so only their measured values are pinned.
        let fits = smoothing_rate_fit(&reports);
        let frozen = [
            0.7405, -0.1211, 0.5885, 9.8548, 0.7405, -0.1343, 0.4270, 8.7710,
        ];
        for (fit, want) in fits.iter().zip(frozen) {
            let got = fit.measured.expect("all parts positive");
            assert!(
                (got - want).abs() <= 1e-3,
                "{}: {got} vs {want}",
                fit.region.label()
            );
        }
        for region in [
            SmoothingRegion::Ia,
            SmoothingRegion::Ib,
            SmoothingRegion::IIIa,
            SmoothingRegion::IIIb,
        ] {
            let fit = &fits[region.index()];
            assert!(
                (fit.measured.unwrap() - fit.claimed).abs() <= 0.15,
                "{}: measured {} vs claimed {}",
                region.label(),
                fit.measured.unwrap(),
                fit.claimed
            );
        }
    }

    #[test]
    fn smoothing_zero_field_vanishes_and_records_serialize() {
        let u = SpectralField::new(4.0);
        let sym = BilinearSymbol::new(SymbolKind::NavierStokesLeray);
        let rep = shell_diagnostics_smoothing(&u, &sym, xyz(2, 0, 0), 1.0, 0.25);
        assert_eq!(rep.parts, [0.0; 8]);
        assert!(rep.hypothesis_ok);
        let recs = rep.records();
        assert_eq!(recs.len(), 9);
        assert!(recs.iter().all(|r| r.pass));
        assert!(recs[0].id.starts_with("smoothing-shell/"));
    }

    #[test]
    fn rate_fit_skips_empty_regions() {
        let eta = 0.5;
        let u = radial_field(6.0, |nq| nq.powf(-(2.0 + eta) / 2.0));
        let sym = BilinearSymbol::new(SymbolKind::WorstCaseScalar);
        // 2|xi| > R for both probes, so no in-ball partner reaches the IV
        // regions and their parts are exactly zero.
        let reports: Vec<_> = [xyz(5, 0, 0), xyz(6, 0, 0)]
            .iter()
            .map(|&xi| shell_diagnostics_smoothing(&u, &sym, xi, 1.0, eta))
            .collect();
        let fits = smoothing_rate_fit(&reports);
        let iva = &fits[SmoothingRegion::IVa.index()];
        assert!(iva.measured.is_none());
        let ia = &fits[SmoothingRegion::Ia.index()];
        assert!(ia.measured.is_some());
    }

    #[test]
    fn existence_records_shape() {
        let u = radial_field(4.0, |nq| 0.01 / nq);
        let sym = BilinearSymbol::new(SymbolKind::WorstCaseScalar);
        let rep = shell_diagnostics_existence(&u, &sym, xyz(2, 0, 0), 0.01);
        let recs = rep.records();
        assert_eq!(recs.len(), 5);
        assert!(recs.iter().all(|r| r.pass));
        assert!(recs[3].id.ends_with("/constant"));
    }
}
