//! Concatenated classic and neural (CCN) channel codes.
//!
//! An outer Reed-Solomon code over GF(2^m) is serially concatenated, through
//! a row-column block interleaver, with a small inner neural autoencoder whose
//! input is one RS symbol (one-hot, k₁ = m bits) and whose output is n₁ real
//! channel uses. The crate trains the inner code end to end and evaluates the
//! concatenation by Monte Carlo simulation over AWGN, Rayleigh fast-fading and
//! bursty channels.
//!
//! Real-valued code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix `f64`, which is what the trainer and the CLI use.

pub mod ccn_codec;
pub mod channels;
pub mod error;
pub mod galois;
pub mod interleaver;
pub mod neural_net;
pub mod normal_approx;
pub mod reed_solomon;
pub mod scalar;
pub mod sim_harness;
pub mod stats;
pub mod trainer;

pub use error::{CcnError, Result};
pub use scalar::Scalar;

/// Inner neural code with 64-bit parameters.
pub type Model = neural_net::NeuralCodeModel<f64>;
/// Inner neural code with 32-bit parameters.
pub type Model32 = neural_net::NeuralCodeModel<f32>;
/// CCN code with a 64-bit inner model.
pub type CcnCode = ccn_codec::CcnCode<f64>;
/// CCN code with a 32-bit inner model.
pub type CcnCode32 = ccn_codec::CcnCode<f32>;
/// Training output for 64-bit models.
pub type TrainOutput = trainer::TrainOutput<f64>;
