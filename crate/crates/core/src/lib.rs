//! Uniform-linear-array MIMO channels with densely spaced antennas.
//!
//! The crate models a deterministic physical channel as a finite sum of
//! propagation paths, represents it in the angular domain, and evaluates
//! Gaussian constrained capacity, the QPSK LMMSE-SIC achievable rate, and a set
//! of diagnostics for the asymptotic equivalence between densely and
//! critically spaced arrays.
//!
//! Modules, bottom up:
//!
//! - [`arraykit`]: signatures, the array kernel `f_{L,Δ}`, the periodic sinc
//!   and the angular DFT basis.
//! - [`channel`]: path sets, Rayleigh instances, angular/spatial channel
//!   matrices and the truncation/shrink operators.
//! - [`capacity`]: constrained capacity, water-filling, covariance presets and
//!   the normalized capacity gaps.
//! - [`sic`]: LMMSE-SIC SINRs, scalar QPSK mutual information and the
//!   brute-force oracle.
//! - [`equivalence`]: matrix norms, spectral functionals and lemma scans.
//! - [`harness`]: configuration, seeded Monte Carlo experiments and CSV output.

pub mod arraykit;
pub mod capacity;
pub mod channel;
pub mod equivalence;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod par;
pub mod sic;

pub use arraykit::ArrayGeometry;
pub use channel::{AngularChannel, DomainRestriction, Path, PathSet};
pub use error::{Error, Result};
