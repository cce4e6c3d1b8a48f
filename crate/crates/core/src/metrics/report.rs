//! Per-frame quality summary and CSV output.

use std::io::Write;

use crate::error::Result;
use crate::foveation::{CsfParams, DisplayGeometry, FoveationMap};
use crate::num::Real;
use crate::video::FramePlane;

use super::fwqi::fwqi_approx;
use super::ssim::{mean, ssim_map, weighted_pool};

pub const CSV_HEADER: &str = "frame_idx,bpp,mean_ssim,fw_ssim,fwqi_approx";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport<T> {
    pub bpp: f64,
    pub mean_ssim: T,
    pub fw_ssim: T,
    pub fwqi_approx: T,
}

fn unit<T: Real>(v: T) -> T {
    v.max(T::zero()).min(T::one())
}

/// Scores a decoded luma plane against its source. SSIM scores are clamped to
/// [0, 1] for reporting; strongly anti-correlated content would otherwise go
/// negative.
pub fn evaluate_frame<T: Real>(
    reference: &FramePlane,
    test: &FramePlane,
    weights: &FoveationMap<T>,
    geom: &DisplayGeometry<T>,
    csf: &CsfParams<T>,
    bpp: f64,
) -> Result<QualityReport<T>> {
    let s = ssim_map::<T>(reference, test)?;
    Ok(QualityReport {
        bpp,
        mean_ssim: unit(mean(&s)),
        fw_ssim: unit(weighted_pool(&s, weights)?),
        fwqi_approx: fwqi_approx(reference, test, weights.gaze(), geom, csf)?,
    })
}

/// Writes one row per frame under a comment noting the weighting map used.
pub fn write_report_csv<T: Real, W: Write>(rows: &[QualityReport<T>], note: &str, sink: W) -> Result<()> {
    let mut sink = std::io::BufWriter::new(sink);
    if !note.is_empty() {
        writeln!(sink, "# {note}")?;
    }
    writeln!(sink, "{CSV_HEADER}")?;
    for (i, r) in rows.iter().enumerate() {
        writeln!(
            sink,
            "{i},{:.6},{:.6},{:.6},{:.6}",
            r.bpp,
            r.mean_ssim.as_f64(),
            r.fw_ssim.as_f64(),
            r.fwqi_approx.as_f64()
        )?;
    }
    sink.flush()?;
    Ok(())
}
