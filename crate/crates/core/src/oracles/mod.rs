//! Constructive oracles: noisy function values, probabilistic gradient and
//! Hessian estimators that report whether their accuracy inequality held,
//! and subsampled estimators for finite sums.

mod gradient;
mod hessian;
mod noise;
mod sampling;

pub use gradient::{
    accurate_scale, estimate_gradient, estimate_gradient_from, gradient_is_accurate, GradientEstimate,
    GradientEstimatorParams, GradientFailure,
};
pub use hessian::{estimate_hessian, estimate_hessian_from, HessianEstimate, HessianEstimatorParams};
pub use noise::{noisy_f_bounded, noisy_f_dynamic, BoundedNoise, DynamicNoise, EvalPoint, NoiseLaw};
pub use sampling::{
    draw_indices, gradient_sample_size, hessian_sample_size, subsampled_gradient, subsampled_hessian,
    SubsamplingParams,
};
