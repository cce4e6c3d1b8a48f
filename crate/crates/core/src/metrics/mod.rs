//! Full-reference quality metrics.

mod fwqi;
mod profile;
mod report;
mod ssim;

pub use fwqi::{fwqi_approx, haar_decompose, Subband, LEVELS as FWQI_LEVELS};
pub use profile::{bits_ssim_profile, eccentricity_band_mean, BitsSsimProfile};
pub use report::{evaluate_frame, write_report_csv, QualityReport, CSV_HEADER};
pub use ssim::{
    foveation_weighted_ssim, gaussian_window, haar_lowpass, mean, ssim_map, stabilizers, weighted_pool,
};
