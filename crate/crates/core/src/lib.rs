//! Pitch-drift measurement for unaccompanied singing: pitch tracks, sentence
//! segmentation, pitch histograms with tilted-Gaussian peak fits, and drift
//! lines over clustered peaks.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod drift;
pub mod figures;
pub mod histogram;
pub mod peaks;
pub mod pipeline;
pub mod pitch_io;
pub mod plot;
pub mod segmentation;
pub mod synth;
