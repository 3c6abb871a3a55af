//! Numerical laboratory for harmonic-analysis estimates in mixed norm spaces.
//!
//! The crate bundles five computational subsystems plus a batch driver:
//!
//! - [`bessel`] — Bessel functions `J_nu` of real order with five-regime
//!   decay envelopes exposed as checkable predicates.
//! - [`spherical`] — real spherical-harmonic bases on the circle and the
//!   2-sphere, expansion/reconstruction, and Plancherel bookkeeping.
//! - [`grids`] — dyadic radial quadrature grids and the mixed norms
//!   `L^p_rad L^2_ang` and `L^{p,2,2}`.
//! - [`surface`] — the extension operator for compact surfaces of
//!   revolution, restriction/extension quotients, and dyadic-block
//!   diagnostics.
//! - [`multiplier`] — the generalized disc multiplier: kernels, the
//!   operator family `T^s`, subordination budgets, and a planar DFT
//!   cross-check.
//! - [`discrete`] — discrete `L^4` restriction for exponential sums:
//!   point sets on circles and spheres, sliding-window norm scans, and
//!   coefficient-ascent extremizer search.
//!
//! Every formula is paired with an independent oracle (see [`oracles`]);
//! the [`acceptance`] module runs the full verification suite that also
//! backs `restriction-lab verify`.
//!
//! Fourier convention used throughout the continuous modules:
//! `F(xi) = \int f(x) e^{-i x.xi} dx` (angular frequency). The discrete
//! module uses the `e^{2 pi i xi.x}` convention of exponential sums.

pub mod acceptance;
pub mod bessel;
pub mod discrete;
pub mod experiment;
pub mod grids;
pub mod multiplier;
pub mod oracles;
pub mod quadrature;
pub mod spherical;
pub mod surface;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("numerical resolution: {0}")]
    Resolution(String),
    #[error("invalid index: {0}")]
    InvalidIndex(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Version string stamped into CSV ledger headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
