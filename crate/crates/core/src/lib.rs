//! Audio-visual emotion learning: a convolutional visual encoder, a spiking
//! auditory encoder, an attention-gated fusion MLP and a brain-emotional-
//! learning head that turns fused features into an emotional positivity
//! score (EPP) in [0, 1].
//!
//! The numeric modules are generic over [`Scalar`] (`f32` or `f64`); data
//! handling, metrics and the pipeline work in `f64`.

// NaN-rejecting guards are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod auditory_cortex;
pub mod bel;
pub mod checkpoint;
pub mod dataset;
pub mod error;
pub mod fusion;
pub mod metrics;
pub mod numkernel;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod visual_cortex;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Tensor32 = numkernel::Tensor<f32>;
pub type Tensor64 = numkernel::Tensor<f64>;
pub type VisualWeights32 = visual_cortex::VisualWeights<f32>;
pub type VisualWeights64 = visual_cortex::VisualWeights<f64>;
pub type FusionWeights32 = fusion::FusionWeights<f32>;
pub type FusionWeights64 = fusion::FusionWeights<f64>;
pub type BelWeights32 = bel::BelWeights<f32>;
pub type BelWeights64 = bel::BelWeights<f64>;
