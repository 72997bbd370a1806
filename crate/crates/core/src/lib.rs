//! Exact Sum-Product kernels over the Boolean hypercube.
//!
//! Given gates `f_1, ..., f_k` on `n` Boolean variables, the Sum-Product is
//! `sum_{x in {0,1}^n} prod_i f_i(x)`. This crate computes it without full
//! enumeration for linear threshold gates and ReLU gates (meet-in-the-middle
//! over exact-threshold decompositions, about `2^{n/2}` work per term) and for
//! low-degree polynomials over a prime field (modulus-amplified root counting
//! over a reduced variable set). On top of those kernels, [`analysis`] decides
//! whether a sparse linear combination of gates is Boolean-valued and counts
//! its satisfying assignments.
//!
//! Every quantity is exact. [`oracle`] holds the brute-force references.

pub mod analysis;
pub mod context;
pub mod error;
pub mod fppoly;
pub mod gates;
pub mod mitm;
pub mod oracle;
pub mod sumprod;
pub mod transforms;

pub use context::{Caps, Context, Work};
pub use error::{Error, Resource, Result};
pub use gates::{
    ExactThresholdGate, Family, FpPolynomial, Gate, GateList, LinComb, Normalized, Rational,
    ReluGate, ThresholdGate,
};
