//! Numerical mathematical diffraction: exact point sets, finite-volume
//! autocorrelations, diffraction estimators and experiment-level
//! diagnostics (homometry, Bernoulli thinning, spectral scaling).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod autocorrelation;
pub mod diffraction;
pub mod error;
pub mod generators;
pub mod geometry;
pub mod golden;
pub mod io;
pub mod numeric;
pub mod pointset;
pub mod rng;

pub use error::{Error, Result};
pub use geometry::{AveragingRegion, Lattice, RegionKind};
pub use golden::ZTau;
pub use num_complex::Complex64;
pub use pointset::{ExactPosition, Provenance, Representation, Support, WeightedPointSet};
