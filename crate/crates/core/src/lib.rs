//! Foveated video coding toolkit.
//!
//! The pipeline: read YUV4MPEG2 frames, predict each 8x8 block from the
//! previous reconstruction by one of thirteen fixed displacements, code the
//! residual with an exactly invertible integer DCT whose quantizer step is
//! chosen per block from a foveation map, and score the result with SSIM
//! variants that weight errors by retinal eccentricity.
//!
//! Perceptual math is generic over [`num::Real`]; the aliases below pin the
//! common instantiations.

pub mod allocation;
pub mod codec;
pub mod displacement;
pub mod error;
pub mod foveation;
pub mod grid;
pub mod metrics;
pub mod num;
pub mod video;

pub use error::{Error, Result};
pub use grid::Grid;

pub type DisplayGeometryF64 = foveation::DisplayGeometry<f64>;
pub type DisplayGeometryF32 = foveation::DisplayGeometry<f32>;
pub type CsfParamsF64 = foveation::CsfParams<f64>;
pub type CsfParamsF32 = foveation::CsfParams<f32>;
pub type FoveationMapF64 = foveation::FoveationMap<f64>;
pub type FoveationMapF32 = foveation::FoveationMap<f32>;
pub type QualityReportF64 = metrics::QualityReport<f64>;
pub type QualityReportF32 = metrics::QualityReport<f32>;
