//! Truncated Fourier-lattice solver for a generalized Navier-Stokes system,
//! plus the verification harness for the estimates the method rests on.
//!
//! The model lives on the integer frequency lattice with the zero mode
//! removed. A velocity field is a map from frequencies to complex 3-vectors,
//! truncated to a ball of radius R (Galerkin truncation: both convolution
//! factors stay inside the ball). The solver iterates the mild-solution map
//!
//!   v(xi, t) = psi(xi) e^{-|xi|^2 t}
//!            + integral_0^t e^{-|xi|^2 (t-s)} B(v, v)(xi, s) ds
//!
//! to a fixed point, where B is a bilinear convolution weighted by a symbol
//! that is at most linear in |xi|. Everything downstream of the solver is
//! measurement: shell decompositions of the convolution sum, uniform-bound
//! and equicontinuity checks on the iterates, decay bootstrapping of the
//! solution, and exponent fits.
//!
//! Module map:
//! - [`field`], [`sums`], [`grid`]: lattice, spectral fields, norms,
//!   deterministic summation, time grids.
//! - [`data`], [`snapshot`]: seeded initial data, text snapshot format.
//! - [`symbol`]: the bilinear symbols M_ijk.
//! - [`conv`]: direct and FFT convolution, one the oracle for the other.
//! - [`shells`]: region decompositions of the convolution sum with
//!   measured-versus-claimed reports.
//! - [`quad`], [`picard`]: kernel-exact Duhamel quadrature and the
//!   fixed-point iteration.
//! - [`schedule`], [`checks`], [`fit`]: bootstrap schedules, the induction
//!   runner, uniform-bound/equicontinuity/decay checks, log-log fits.
//! - [`report`]: flat check records that serialize to diffable text.

pub mod checks;
pub mod conv;
pub mod data;
pub mod field;
pub mod fit;
pub mod grid;
pub mod picard;
pub mod quad;
pub mod report;
pub mod schedule;
pub mod shells;
pub mod snapshot;
pub mod sums;
pub mod symbol;

pub use field::{Frequency, SpectralField, Vec3};
pub use grid::{TimeGrid, Trajectory};
pub use symbol::{BilinearSymbol, SymbolKind};
