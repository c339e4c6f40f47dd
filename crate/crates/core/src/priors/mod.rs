//! Action-sequence priors.

pub mod features;
pub mod kernel;
pub mod matrix_normal;
pub mod shift;
pub mod smoothing;

pub use features::{gauss_hermite, qrff_feature_map, rbf_feature_map, FeatureKind, FeaturePolicy};
pub use kernel::{kernel_cross, kernel_gram, Kernel, TimeGrid};
pub use matrix_normal::{mavn_sample, mavn_weighted_mle, MatrixNormalPolicy};
pub use shift::{gp_shift, ShiftOperator, Shifted};
pub use smoothing::{
    clip_to_limits, coloured_noise, conditional_gibbs_sample, smoothed_noise_sequence, OneStepJoint,
    SmoothingConfig, SmoothingVariant, StepGaussian,
};
