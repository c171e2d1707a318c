//! Frequencies, spectral fields, and the weighted sup norm.
//!
//! A [`Frequency`] is a nonzero point of the integer lattice Z^3; the zero
//! mode is excluded from the model (mean-free flow), so zero is not
//! representable. A [`SpectralField`] stores complex 3-vector coefficients
//! on frequencies inside a closed truncation ball |xi| <= R; absent entries
//! are exact zeros. The size of a field is measured by
//! [`SpectralField::phi2_norm`], the supremum of |xi|^2 |v(xi)| over stored
//! modes and components.

use std::collections::BTreeMap;

use num_complex::Complex64;

/// One complex coefficient vector: the three velocity components at a mode.
pub type Vec3 = [Complex64; 3];

pub(crate) const ZERO_VEC3: Vec3 = [Complex64::ZERO; 3];

/// Largest component magnitude; the per-mode quantity every sup-norm bound
/// in this crate is phrased in.
pub fn vec3_sup(v: &Vec3) -> f64 {
    v[0].norm().max(v[1].norm()).max(v[2].norm())
}

/// A nonzero integer lattice frequency. Ordering is lexicographic on the
/// components, which fixes the deterministic enumeration order used
/// throughout.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Frequency([i64; 3]);

impl Frequency {
    /// Returns `None` for the excluded zero mode.
    pub fn new(c: [i64; 3]) -> Option<Self> {
        if c == [0, 0, 0] {
            None
        } else {
            Some(Frequency(c))
        }
    }

    /// Constructor for literals; panics on the zero mode.
    pub fn xyz(x: i64, y: i64, z: i64) -> Self {
        Frequency::new([x, y, z]).expect("the zero mode is not a Frequency")
    }

    pub fn components(self) -> [i64; 3] {
        self.0
    }

    /// |xi|^2, exact in integers.
    pub fn norm_sq(self) -> i64 {
        let [x, y, z] = self.0;
        x * x + y * y + z * z
    }

    pub fn norm(self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    /// xi - q, or `None` when the difference is the zero mode.
    pub fn checked_sub(self, q: Frequency) -> Option<Frequency> {
        let [a, b, c] = self.0;
        let [d, e, f] = q.0;
        Frequency::new([a - d, b - e, c - f])
    }
}

impl std::ops::Neg for Frequency {
    type Output = Frequency;
    fn neg(self) -> Frequency {
        let [x, y, z] = self.0;
        Frequency([-x, -y, -z])
    }
}

impl std::fmt::Debug for Frequency {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.0[0], self.0[1], self.0[2])
    }
}

impl std::fmt::Display for Frequency {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.0[0], self.0[1], self.0[2])
    }
}

/// Sparse spectral coefficients on the truncated lattice.
///
/// Invariants: every stored frequency satisfies |xi| <= radius, and stored
/// values may be anything including exact zero (constructors that care prune
/// exact zeros to keep supports minimal). Iteration order is lexicographic.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    radius: f64,
    entries: BTreeMap<Frequency, Vec3>,
}

impl SpectralField {
    /// Empty field on the ball of the given radius.
    pub fn new(radius: f64) -> Self {
        assert!(radius > 0.0, "truncation radius must be positive");
        SpectralField {
            radius,
            entries: BTreeMap::new(),
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains_radius(&self, xi: Frequency) -> bool {
        xi.norm_sq() as f64 <= self.radius * self.radius
    }

    /// Coefficient at `xi`; absent entries are exact zeros.
    pub fn get(&self, xi: Frequency) -> Vec3 {
        self.entries.get(&xi).copied().unwrap_or(ZERO_VEC3)
    }

    /// Stores a coefficient. Panics outside the truncation ball: callers
    /// construct fields from enumerations that respect the radius, so an
    /// out-of-ball insert is a logic error, not input.
    pub fn insert(&mut self, xi: Frequency, value: Vec3) {
        assert!(
            self.contains_radius(xi),
            "mode {xi} outside truncation ball of radius {}",
            self.radius
        );
        self.entries.insert(xi, value);
    }

    /// Lexicographic iteration over stored modes.
    pub fn iter(&self) -> impl Iterator<Item = (Frequency, &Vec3)> {
        self.entries.iter().map(|(k, v)| (*k, v))
    }

    /// sup over stored modes of |xi|^2 max_k |v^k(xi)|. Empty field: 0.
    pub fn phi2_norm(&self) -> f64 {
        let mut sup = 0.0f64;
        for (xi, v) in self.iter() {
            sup = sup.max(xi.norm_sq() as f64 * vec3_sup(v));
        }
        sup
    }

    /// Largest violation of conjugate symmetry, max over stored modes of
    /// |v(xi) - conj(v(-xi))|. A mode without a stored mirror is compared
    /// against zero. 0 for fields that are exactly Hermitian.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (xi, v) in self.iter() {
            let mirror = self.get(-xi);
            for k in 0..3 {
                worst = worst.max((v[k] - mirror[k].conj()).norm());
            }
        }
        worst
    }

    /// Largest |xi . v(xi)| over stored modes; zero for divergence-free
    /// fields (in the Fourier sense).
    pub fn divergence_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (xi, v) in self.iter() {
            let [x, y, z] = xi.components();
            let dot = v[0] * x as f64 + v[1] * y as f64 + v[2] * z as f64;
            worst = worst.max(dot.norm());
        }
        worst
    }
}

/// Hermitian part of a field: g(xi) = (f(xi) + conj(f(-xi))) / 2.
/// Idempotent, and the result represents a real-valued physical field.
pub fn hermitian_project(f: &SpectralField) -> SpectralField {
    let mut out = SpectralField::new(f.radius());
    for (xi, v) in f.iter() {
        let mirror = f.get(-xi);
        let mut g = ZERO_VEC3;
        for k in 0..3 {
            g[k] = (v[k] + mirror[k].conj()) * 0.5;
        }
        if g != ZERO_VEC3 {
            out.insert(xi, g);
        }
        // The mirror mode itself appears in the iteration if stored; a mode
        // whose mirror is absent still needs the mirror written for the
        // output to be symmetric.
        if f.entries.get(&-xi).is_none() {
            let h = [g[0].conj(), g[1].conj(), g[2].conj()];
            if h != ZERO_VEC3 {
                out.insert(-xi, h);
            }
        }
    }
    out
}

/// sup over the union of supports of |xi|^2 max_k |a^k(xi) - b^k(xi)|.
/// The distance the solver's convergence is measured in.
pub fn phi2_distance(a: &SpectralField, b: &SpectralField) -> f64 {
    let mut sup = 0.0f64;
    let mut ia = a.entries.iter().peekable();
    let mut ib = b.entries.iter().peekable();
    loop {
        let ord = match (ia.peek(), ib.peek()) {
            (None, None) => break,
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (Some((ka, _)), Some((kb, _))) => ka.cmp(kb),
        };
        let (xi, diff) = match ord {
            std::cmp::Ordering::Less => {
                let (k, va) = ia.next().unwrap();
                (*k, vec3_sup(va))
            }
            std::cmp::Ordering::Greater => {
                let (k, vb) = ib.next().unwrap();
                (*k, vec3_sup(vb))
            }
            std::cmp::Ordering::Equal => {
                let (k, va) = ia.next().unwrap();
                let (_, vb) = ib.next().unwrap();
                let d = [va[0] - vb[0], va[1] - vb[1], va[2] - vb[2]];
                (*k, vec3_sup(&d))
            }
        };
        sup = sup.max(xi.norm_sq() as f64 * diff);
    }
    sup
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_mode_is_not_representable() {
        assert!(Frequency::new([0, 0, 0]).is_none());
        assert!(Frequency::new([0, 0, 1]).is_some());
    }

    #[test]
    fn checked_sub_refuses_equal_modes() {
        let xi = Frequency::xyz(2, -1, 3);
        assert!(xi.checked_sub(xi).is_none());
        assert_eq!(
            xi.checked_sub(Frequency::xyz(1, -1, 3)),
            Some(Frequency::xyz(1, 0, 0))
        );
    }

    #[test]
    fn phi2_norm_weights_by_norm_squared() {
        let mut f = SpectralField::new(4.0);
        f.insert(Frequency::xyz(1, 0, 0), [c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        f.insert(Frequency::xyz(2, 0, 0), [c(0.0, 0.0), c(0.0, 0.25), c(0.0, 0.0)]);
        // |(1,0,0)|^2 * 0.5 = 0.5 and |(2,0,0)|^2 * 0.25 = 1.0.
        assert_eq!(f.phi2_norm(), 1.0);
    }

    #[test]
    fn phi2_norm_of_empty_field_is_zero() {
        assert_eq!(SpectralField::new(2.0).phi2_norm(), 0.0);
    }

    #[test]
    #[should_panic(expected = "outside truncation ball")]
    fn insert_outside_ball_panics() {
        let mut f = SpectralField::new(2.0);
        f.insert(Frequency::xyz(3, 0, 0), ZERO_VEC3);
    }

    #[test]
    fn hermitian_project_is_idempotent_and_symmetric() {
        let mut f = SpectralField::new(3.0);
        f.insert(Frequency::xyz(1, 2, 0), [c(1.0, -2.0), c(0.5, 0.25), c(0.0, 1.0)]);
        f.insert(Frequency::xyz(-1, -2, 0), [c(3.0, 1.0), c(0.0, 0.0), c(2.0, 2.0)]);
        f.insert(Frequency::xyz(0, 0, 2), [c(1.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let g = hermitian_project(&f);
        assert!(g.hermitian_defect() == 0.0);
        let gg = hermitian_project(&g);
        assert!(phi2_distance(&g, &gg) <= 1e-15 * (1.0 + g.phi2_norm()));
    }

    #[test]
    fn phi2_distance_handles_disjoint_supports() {
        let mut a = SpectralField::new(3.0);
        a.insert(Frequency::xyz(1, 0, 0), [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let mut b = SpectralField::new(3.0);
        b.insert(Frequency::xyz(0, 2, 0), [c(0.0, 0.5), c(0.0, 0.0), c(0.0, 0.0)]);
        // Each side contributes its own weighted magnitude.
        assert_eq!(phi2_distance(&a, &b), 2.0);
        assert_eq!(phi2_distance(&a, &a), 0.0);
    }

    #[test]
    fn divergence_defect_sees_parallel_component() {
        let mut f = SpectralField::new(2.0);
        f.insert(Frequency::xyz(2, 0, 0), [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(f.divergence_defect(), 2.0);
        let mut g = SpectralField::new(2.0);
        g.insert(Frequency::xyz(2, 0, 0), [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(g.divergence_defect(), 0.0);
    }
}
