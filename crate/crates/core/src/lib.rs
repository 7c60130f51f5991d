//! Secure downlink transmission for IRS-assisted MIMO under an active pilot attack.
//!
//! The crate covers the full chain of a single-cell simulation:
//!
//! * [`scenario`]: deterministic system parameters, exponential correlation
//!   matrices and path-loss gains.
//! * [`channel`]: correlated Rayleigh sampling of direct, IRS and cascaded channels.
//! * [`training`]: orthogonal pilots, uplink training with the eavesdropper
//!   replaying the victim's pilot, and the resulting contaminated estimates.
//! * [`objective`]: the statistical alignment functional and the regularized
//!   stochastic SRZF objective, plus a Monte Carlo oracle for the expectations.
//! * [`optimizer`]: alternating minimization over beamformer expansion
//!   coefficients and relaxed IRS phases with unit-circle projection.
//! * [`downlink`]: beamformer assembly, the random-phase MRT benchmark,
//!   SINR/ESNR and ergodic secrecy rates.
//!
//! All numerics are generic over the real scalar [`Real`] (`f32` or `f64`);
//! the `*64` / `*32` aliases below pin the common instantiations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod downlink;
pub mod error;
pub mod objective;
pub mod optimizer;
pub mod scalar;
pub mod scenario;
pub mod training;

pub use error::{Error, Result};
pub use scalar::{Cx, Real};
pub use scenario::{PerTerminal, Terminal};

pub type ScenarioConfig64 = scenario::ScenarioConfig<f64>;
pub type ScenarioConfig32 = scenario::ScenarioConfig<f32>;
pub type CorrelationSet64 = scenario::CorrelationSet<f64>;
pub type ChannelRealization64 = channel::ChannelRealization<f64>;
pub type ChannelSampler64 = channel::ChannelSampler<f64>;
pub type EstimatedCsi64 = training::EstimatedCsi<f64>;
pub type AlignmentParams64 = objective::AlignmentParams<f64>;
pub type ObjectiveSpec64 = objective::ObjectiveSpec<f64>;
pub type OptimizerConfig64 = optimizer::OptimizerConfig<f64>;
pub type DesignResult64 = optimizer::DesignResult<f64>;
pub type PrecoderDesign64 = downlink::PrecoderDesign<f64>;
pub type RateReport64 = downlink::RateReport<f64>;

pub type ChannelRealization32 = channel::ChannelRealization<f32>;
pub type AlignmentParams32 = objective::AlignmentParams<f32>;
