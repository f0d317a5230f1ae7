//! Complementary normalized compressive ghost imaging.
//!
//! Simulates coincidence counts of complementary Hadamard pattern pairs on a
//! double-slit object, normalizes them by the pair sums, reconstructs the
//! object with orthogonal matching pursuit or total-variation minimization
//! and scores the result by contrast-to-noise ratio.
//!
//! Numeric code is generic over [`Real`]; the `*64` aliases below fix the
//! scalar to `f64`, which is what the pipeline uses.

// `!(x > 0.0)` is used on purpose so that NaN parameters are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod format;
pub mod linalg;
pub mod metrics;
pub mod normalize;
pub mod photonsim;
pub mod pipeline;
pub mod scalar;
pub mod scene;
pub mod sensing;
pub mod solvers;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Matrix64 = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;
pub type Phantom64 = scene::Phantom<f64>;
pub type Phantom32 = scene::Phantom<f32>;
pub type MeasurementRecord64 = photonsim::MeasurementRecord<f64>;
pub type MeasurementVectors64 = normalize::MeasurementVectors<f64>;
pub type ReconImage64 = solvers::ReconImage<f64>;
pub type ReconImage32 = solvers::ReconImage<f32>;
