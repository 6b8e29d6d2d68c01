//! Bessel-orbit diagnostics for normal operators.
//!
//! Given the scalar spectral measure `μ` of a vector `x` under a normal
//! operator `A` (so `μ(Δ) = ‖E(Δ)x‖²`), this crate decides numerically whether
//! the orbit `(Aⁿx)_{n≥0}` is a Bessel sequence, and with which bound.
//!
//! The pieces:
//!
//! * [`densexpr`] parses density strings such as `"1 + cos(theta)"`.
//! * [`measure`] represents `μ` and integrates against it.
//! * [`gram`] builds finite sections of the Gram matrix `(⟨Aᵏx, Aʲx⟩)` and
//!   estimates their norms.
//! * [`criteria`] evaluates the equivalent Bessel characterizations and
//!   combines them into a verdict.
//! * [`heat`] is the discretized heat-equation measure, the standard example of
//!   an orbit that is not Bessel although all its moments decay.
//!
//! ```
//! use besselkit::measure::SpectralMeasure;
//!
//! let mu = SpectralMeasure::normalized_arc();
//! assert!((mu.total_mass().unwrap() - 1.0).abs() < 1e-12);
//! ```

pub mod densexpr;
pub mod error;
pub mod gram;
pub mod heat;
pub mod criteria;
pub mod measure;
pub mod quadrature;

pub use error::{Error, Result};
pub use measure::SpectralMeasure;
