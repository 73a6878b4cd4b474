//! Weighted empirical measures and optimal transport on the unit cube.
//!
//! This crate implements the numerical machinery for studying how well a
//! self-normalized weighted sample approximates its target density when the
//! error is measured by a p-Wasserstein cost:
//!
//! * [`density`] — a family of smooth, strictly positive densities on
//!   `(0,1)^d` with exact samplers, tempering, and the cost functional
//!   `J_g(f) = ∫ g f^{-p/d}` that governs proposal quality;
//! * [`measure`] — weighted empirical measures built from importance
//!   ratios, together with the effective-sample-size formula;
//! * [`transport`] — exact (network simplex) and entropic (log-domain
//!   Sinkhorn) solvers for discrete transport, density discretization,
//!   and the boundary-relaxed transport cost on boxes;
//! * [`dyadic`] — dyadic partitions of the cube, per-cube occupancy
//!   statistics and the multiscale decomposition diagnostic;
//! * [`concentration`] — Bennett-type tail bounds and empirical checkers
//!   that validate observed deviations against them;
//! * [`fit`] — small least-squares helpers for slope estimation.
//!
//! The crate is `no_std` (with `alloc`); everything that touches the file
//! system, threads or a command line lives in the companion `wis-cli` crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod concentration;
pub mod density;
pub mod dyadic;
pub mod error;
pub mod fit;
pub mod geom;
pub mod measure;
pub mod quad;
pub mod rng;
pub mod transport;

pub use density::{functional_j, jensen_gap, Density, DensityKind};
pub use error::{Error, Result};
pub use geom::AxisBox;
pub use measure::{build_is_measure, ess, EssReport, WeightedEmpiricalMeasure};
pub use quad::{QuadRule, Quadrature};
pub use rng::RngStream;
pub use transport::{
    boundary_wasserstein, discretize_density, flat_bound, is_cost, wasserstein_entropic,
    wasserstein_exact, DiscreteMeasure, TransportResult,
};
