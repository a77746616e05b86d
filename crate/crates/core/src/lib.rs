//! Jump-counting retrieval for processes time-changed by subordinators.
//!
//! A right-continuous process `X` is integrated to `Y_u = ∫_0^u X_s ds` and then
//! observed only through `Ŷ_ℓ = Y_{τ_ℓ}`. When `τ` is a stable subordinator the
//! number of jumps of `Ŷ` above a vanishing threshold recovers `X_0`; when `τ` is
//! a gamma subordinator it does not. This crate provides the samplers, the
//! counting statistics and the estimators, plus the statistical tests used to
//! check them.
//!
//! The numerical core is generic over the scalar type through [`Real`]. The
//! `*64` / `*32` aliases below fix the common choices.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod error;
pub mod processes;
pub mod quasiinvariance;
pub mod real;
pub mod retrieval;
pub mod rng;
pub mod special;
pub mod stats;
pub mod subordinators;
pub mod timechange;

pub use error::{Error, Result};
pub use real::Real;

pub use processes::{Interpolation, ProcessEvaluator, ProcessSpec, SampledPath};
pub use retrieval::{CountRecord, EstimateSeries, ExponentMode, ThresholdRule};
pub use stats::TestReport;
pub use subordinators::{Jump, JumpPath, Normalization, StableConfig};
pub use timechange::{ItoJumpDelta, JumpDelta};

pub type JumpPath64 = JumpPath<f64>;
pub type JumpPath32 = JumpPath<f32>;
pub type StableConfig64 = StableConfig<f64>;
pub type StableConfig32 = StableConfig<f32>;
pub type SampledPath64 = SampledPath<f64>;
pub type SampledPath32 = SampledPath<f32>;
pub type ProcessSpec64 = ProcessSpec<f64>;
pub type JumpDelta64 = JumpDelta<f64>;
pub type ItoJumpDelta64 = ItoJumpDelta<f64>;
pub type CountRecord64 = CountRecord<f64>;
pub type EstimateSeries64 = EstimateSeries<f64>;
