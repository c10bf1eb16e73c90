//! # fusion-spectra
//!
//! Kernel sensor fusion under high-dimensional noise. Two aligned point clouds
//! are turned into Gaussian affinity matrices, row-normalised into Markov
//! transition matrices, and multiplied into the NCCA matrix `N = A1 A2ᵀ` or
//! the alternating-diffusion matrix `A = A1 A2`. The crate computes the
//! spectra of these products and predicts them independently with
//! random-matrix theory:
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`model`] | spiked common-signal generator (`X = U_x + Z`, `Y = U_y + W`) |
//! | [`kernel`] | pairwise distances, affinities, transition and fused matrices, spectra |
//! | [`bandwidth`] | classic (`h = p`) and percentile bandwidths |
//! | [`rmt`] | Marchenko–Pastur laws, quantiles, free multiplicative convolution, Haar Monte-Carlo |
//! | [`reference`] | clean-signal reference matrices and Taylor-expansion surrogates |
//! | [`regime`] | SNR regime classification and predicted-vs-empirical reports |
//! | [`app`] | the command-line workflows behind the `fusion-spectra` binary |
//!
//! The SNR of each sensor is parametrised by an exponent ζ with signal
//! variance `n^ζ`. Below ζ = 1 the noise dominates and the bulk spectrum of
//! `n²N` follows a free multiplicative convolution of two shifted MP laws;
//! above it the fused matrix tracks its clean-signal counterpart.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod bandwidth;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod model;
pub mod reference;
pub mod regime;
pub mod rmt;

pub use bandwidth::BandwidthPolicy;
pub use error::{Error, Result};
pub use kernel::{KernelStack, Scale, SpectrumResult};
pub use model::{ModelConfig, NoiseKind, PointCloudPair, SignalKind};
pub use regime::{ExperimentConfig, MatrixKind, Regime, RegimeReport, RegimeThresholds};
pub use rmt::{ConvolutionResult, Measure, ModelScalars};
