//! Least-squares decay fits on shell maxima.
//!
//! Shell maxima, not means: the norms in play are weighted sup norms, so the
//! decay statement worth checking is about the largest coefficient on each
//! shell. Fits run on (log |xi|, log value) pairs; zero shells carry no
//! information for a power law and are dropped.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::field::{vec3_sup, SpectralField};

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least 3 nonzero shells above k_min={k_min}, found {found}")]
    TooFewShells { k_min: f64, found: usize },
}

/// Result of fitting value ~= prefactor * |xi|^{-exponent}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Decay rate, positive for decaying data.
    pub exponent: f64,
    /// Multiplier in front of the power law.
    pub prefactor: f64,
    /// Number of distinct |xi| shells used.
    pub shells_used: usize,
    /// Smallest and largest shell radius entering the fit.
    pub k_min: f64,
    pub k_max: f64,
    /// max |log value - log fit| over the shells; honesty metric for the fit.
    pub residual: f64,
}

/// Plain least squares of y against x; returns (slope, intercept, max
/// absolute residual). Two or more points required.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    assert!(points.len() >= 2, "fit needs at least two points");
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    assert!(denom.abs() > 0.0, "degenerate abscissas in fit");
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let resid = points
        .iter()
        .map(|(x, y)| (y - (intercept + slope * x)).abs())
        .fold(0.0, f64::max);
    (slope, intercept, resid)
}

/// Power-law fit on (radius, value) shell data with positive values.
pub fn fit_shell_values(shells: &[(f64, f64)], k_min: f64) -> Result<DecayFit, FitError> {
    let usable: Vec<(f64, f64)> = shells
        .iter()
        .copied()
        .filter(|(r, v)| *r >= k_min && *v > 0.0)
        .collect();
    if usable.len() < 3 {
        return Err(FitError::TooFewShells {
            k_min,
            found: usable.len(),
        });
    }
    let logs: Vec<(f64, f64)> = usable.iter().map(|(r, v)| (r.ln(), v.ln())).collect();
    let (slope, intercept, residual) = linear_fit(&logs);
    Ok(DecayFit {
        exponent: -slope,
        prefactor: intercept.exp(),
        shells_used: usable.len(),
        k_min: usable.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        k_max: usable.iter().map(|p| p.0).fold(0.0, f64::max),
        residual,
    })
}

/// Shell maxima of a field: for each distinct |xi|^2 the largest component
/// magnitude, in increasing shell order. Absent modes are zeros and cannot
/// raise a maximum; shells whose stored maximum is zero are dropped by the
/// fit downstream.
pub fn shell_maxima(f: &SpectralField) -> Vec<(f64, f64)> {
    let mut shells: BTreeMap<i64, f64> = BTreeMap::new();
    for (xi, v) in f.iter() {
        let m = shells.entry(xi.norm_sq()).or_insert(0.0);
        *m = m.max(vec3_sup(v));
    }
    shells
        .into_iter()
        .map(|(nsq, v)| ((nsq as f64).sqrt(), v))
        .collect()
}

/// Fits |f(xi)| ~= prefactor |xi|^{-exponent} over shell maxima with
/// |xi| >= k_min.
pub fn fit_decay_exponent(f: &SpectralField, k_min: f64) -> Result<DecayFit, FitError> {
    fit_shell_values(&shell_maxima(f), k_min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use crate::field::{Frequency, SpectralField};
    use crate::sums::modes_in_ball;

    fn power_law_field(r: f64, p: f64, d: f64) -> SpectralField {
        let mut f = SpectralField::new(r);
        for xi in modes_in_ball(r) {
            let v = d * xi.norm().powf(-p);
            f.insert(xi, [Complex64::new(v, 0.0), Complex64::ZERO, Complex64::ZERO]);
        }
        f
    }

    #[test]
    fn exact_power_laws_are_recovered() {
        for p in [2.0, 2.25, 3.0, 4.0] {
            let f = power_law_field(8.0, p, 1.75);
            let fit = fit_decay_exponent(&f, 1.0).unwrap();
            assert!((fit.exponent - p).abs() < 1e-10, "p={p}: {}", fit.exponent);
            assert!((fit.prefactor - 1.75).abs() < 1e-10);
            assert!(fit.residual < 1e-12);
        }
    }

    #[test]
    fn cube_decay_fits_exactly() {
        let f = power_law_field(6.0, 3.0, 1.0);
        let fit = fit_decay_exponent(&f, 1.0).unwrap();
        assert!((fit.exponent - 3.0).abs() < 1e-12);
        assert!(fit.residual <= 1e-12);
    }

    #[test]
    fn super_polynomial_signature_grows_with_k_min() {
        // |f| = |xi|^{-2} e^{-|xi|}: the local slope steepens, so raising
        // k_min raises the fitted exponent.
        let mut f = SpectralField::new(12.0);
        for xi in modes_in_ball(12.0) {
            let n = xi.norm();
            let v = n.powf(-2.0) * (-n).exp();
            f.insert(xi, [Complex64::new(v, 0.0), Complex64::ZERO, Complex64::ZERO]);
        }
        let e2 = fit_decay_exponent(&f, 2.0).unwrap().exponent;
        let e4 = fit_decay_exponent(&f, 4.0).unwrap().exponent;
        let e8 = fit_decay_exponent(&f, 8.0).unwrap().exponent;
        assert!(e2 < e4 && e4 < e8, "{e2} {e4} {e8}");
    }

    #[test]
    fn heat_decay_exponent_grows_with_radius() {
        // delta-like data, one heat step: coefficients e^{-|xi|^2} decay
        // faster than any fixed power, so larger balls fit larger exponents.
        let mut fits = Vec::new();
        for r in [3.0, 5.0, 8.0] {
            let mut f = SpectralField::new(r);
            for xi in modes_in_ball(r) {
                let v = (-(xi.norm_sq() as f64)).exp();
                f.insert(xi, [Complex64::new(v, 0.0), Complex64::ZERO, Complex64::ZERO]);
            }
            fits.push(fit_decay_exponent(&f, 1.0).unwrap().exponent);
        }
        assert!(fits[0] < fits[1] && fits[1] < fits[2], "{fits:?}");
    }

    #[test]
    fn too_few_shells_is_an_error() {
        let f = power_law_field(1.5, 2.0, 1.0); // shells |xi|^2 in {1, 2} only
        assert!(matches!(
            fit_decay_exponent(&f, 1.0),
            Err(FitError::TooFewShells { .. })
        ));
    }

    #[test]
    fn zero_shells_are_dropped_not_fitted() {
        let mut f = SpectralField::new(7.0);
        for n in 1..=5i64 {
            let v = 1.0 / (n * n) as f64;
            f.insert(
                Frequency::xyz(n, 0, 0),
                [Complex64::new(v, 0.0), Complex64::ZERO, Complex64::ZERO],
            );
        }
        f.insert(Frequency::xyz(6, 0, 0), [Complex64::ZERO; 3]);
        let fit = fit_decay_exponent(&f, 1.0).unwrap();
        assert_eq!(fit.shells_used, 5);
        assert!((fit.exponent - 2.0).abs() < 1e-12);
    }
}
