//! Protocol engine and deterministic simulator for S-money: classical
//! tokens on causally constrained space-time networks.

pub mod causal;
pub mod num;
pub mod coordination;
pub mod scenarios;
pub mod scheme;
pub mod sim;
pub mod stats;

pub use causal::{CausalError, CausalRelation, PointId};
pub use num::{Credits, Fixed, Scalar};

pub type SpacetimePoint = causal::SpacetimePoint<f64>;
pub type SignallingModel = causal::SignallingModel<f64>;
pub type Location = causal::Location<f64>;
pub type Network = causal::Network<f64>;

pub type SpacetimePointF32 = causal::SpacetimePoint<f32>;
pub type SignallingModelF32 = causal::SignallingModel<f32>;
pub type NetworkF32 = causal::Network<f32>;
