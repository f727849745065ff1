//! Signal model, channel synthesis and arithmetic-sum estimators for
//! over-the-air computation with misaligned devices.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod channel;
pub mod error;
pub mod estimators;
pub mod model;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use estimators::{EstimateReport, EstimatorId, SlotModel, SlotStreams};
pub use scalar::Real;

pub type Geometry = model::SlotGeometry<f64>;
pub type Profile = model::DeviceProfile<f64>;
pub type Symbols = channel::SymbolBlock<f64>;
pub type Stream = channel::SampleStream<f64>;
pub type Message = chain::GaussianMessage<f64>;
pub type Marginal = chain::SymbolMarginal<f64>;
pub type Report = EstimateReport<f64>;
pub type Slot = SlotModel<f64>;
pub type Complex64 = num_complex::Complex<f64>;
