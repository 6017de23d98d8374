//! Numerical toolkit for cyclicity experiments in weighted spaces of
//! analytic functions on the unit disk.
//!
//! The library models measures built from a radial disk weight plus a
//! boundary weight on a carrier set, evaluates inner and outer functions
//! anywhere those evaluations are well posed, and computes two families of
//! results about the shift-invariant subspace generated by a bounded
//! function:
//!
//! * primal distance curves `d_N = inf_{deg p <= N} ||theta p - 1||`, via
//!   Gram systems and normal equations, and
//! * dual lower-bound certificates for those distances, via analytic
//!   projections of boundary densities and a radial Cauchy-transform solve.
//!
//! Everything is deterministic: fixed-order summation, no randomness, no
//! time dependence. Two runs with the same inputs produce identical bytes.

pub mod circle;
pub mod engine;
pub mod error;
pub mod func;
pub mod linalg;
pub mod measure;
pub mod norms;
pub mod quad;
pub mod series;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
