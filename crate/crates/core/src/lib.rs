//! Dynamics of a driven two-level system and the equivalent classical
//! gyromagnet picture.
//!
//! The library evolves a spinor under a time-dependent magnetic field,
//! mirrors the evolution on the Bloch sphere, builds stroboscopic maps of
//! the driven system, fits the effective stroboscopic frequency, and
//! searches for field parameters that realize a unitary NOT operation.
//!
//! All core math is generic over the scalar type through [`Scalar`]
//! (any `num_traits::Float` with the usual constants); concrete `f64`
//! aliases are exported at the crate root.

use std::fmt;

use num_traits::{Float, FloatConst};

pub mod analysis;
pub mod bloch;
pub mod error;
pub mod fields;
pub mod math;
pub mod notgate;
pub mod propagator;
pub mod stroboscope;

pub use error::{Error, Result};

/// Scalar type the whole crate is generic over.
pub trait Scalar: Float + FloatConst + fmt::Debug + fmt::Display + Send + Sync + 'static {}
impl<T: Float + FloatConst + fmt::Debug + fmt::Display + Send + Sync + 'static> Scalar for T {}

/// Shorthand for converting an `f64` literal into the working scalar.
pub(crate) fn lit<T: Scalar>(x: f64) -> T {
    T::from(x).expect("literal representable in scalar type")
}

/// Lossy view of a scalar as `f64`, used for error reporting.
pub(crate) fn as_f64<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

// Concrete double-precision aliases; the CLI and most tests use these.
pub type Vec3f64 = math::Vec3<f64>;
pub type Mat2f64 = math::Mat2<f64>;
pub type Spinor64 = propagator::Spinor<f64>;
pub type FieldSpec64 = fields::FieldSpec<f64>;
pub type BlochVector64 = bloch::BlochVector<f64>;
pub type CanonicalPoint64 = bloch::CanonicalPoint<f64>;
pub type StepControl64 = propagator::StepControl<f64>;
pub type StrobeSeries64 = stroboscope::StrobeSeries<f64>;
pub type GammaFit64 = stroboscope::GammaFit<f64>;

// Single-precision aliases for callers that trade accuracy for speed.
pub type Vec3f32 = math::Vec3<f32>;
pub type Spinor32 = propagator::Spinor<f32>;
pub type FieldSpec32 = fields::FieldSpec<f32>;
