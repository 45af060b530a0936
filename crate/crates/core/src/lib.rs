//! Truncated multiple Fourier series expansions of iterated Itô and
//! Stratonovich stochastic integrals.
//!
//! The crate is organised bottom-up:
//!
//! * [`basis`]: Legendre polynomials, the orthonormal Legendre and
//!   trigonometric systems on `[t, T]`, Gauss–Legendre rules.
//! * [`coeffs`]: the ordered kernel and its Fourier coefficients
//!   `C_{j_k...j_1}` computed by nested quadrature.
//! * [`expansion`]: Gaussian pools and the truncated Itô/Stratonovich sums.
//! * [`catalog`]: closed-form expansions of the standard monomial-weight
//!   integrals used by Taylor-type schemes.
//! * [`oracle`]: brute-force Wiener path discretisation for validation.
//! * [`sde`]: Euler–Maruyama, Milstein and strong Taylor 1.5 schemes plus a
//!   strong-order estimation harness.

pub mod basis;
pub mod catalog;
pub mod coeffs;
mod error;
pub mod expansion;
pub mod oracle;
pub mod report;
pub mod rng;
pub mod sde;

pub use basis::{Basis, BasisKind, Interval, QuadratureRule};
pub use catalog::{IntegralId, Tag, TrigTail};
pub use coeffs::{CoefficientTable, MultiIndex, WeightSpec};
pub use error::{Error, Result};
pub use expansion::{ExpansionKind, ExpansionValue, GaussianPool, NoiseSelector};
pub use oracle::{IntegralSpec, McConfig, McReport, OracleEstimate, WienerPath};
pub use sde::{ConvergenceReport, Scheme, SdeProblem};
