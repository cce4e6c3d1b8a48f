//! Column profiles of spent bits and achieved SSIM.

use crate::error::{contract, Result};
use crate::foveation::{eccentricity, DisplayGeometry, Gaze};
use crate::grid::Grid;
use crate::num::Real;

/// Per-column bits and column-mean SSIM.
#[derive(Debug, Clone, PartialEq)]
pub struct BitsSsimProfile<T> {
    pub bits: Vec<u64>,
    pub ssim: Vec<T>,
}

impl<T: Real> BitsSsimProfile<T> {
    pub fn total_bits(&self) -> u64 {
        self.bits.iter().sum()
    }

    /// Column holding the most bits; the leftmost one wins ties.
    pub fn peak_column(&self) -> Option<usize> {
        let max = *self.bits.iter().max()?;
        self.bits.iter().position(|&b| b == max)
    }
}

/// Spreads each block's bits over its pixel columns (integer share, the
/// remainder going to the leftmost columns) and averages SSIM per column.
pub fn bits_ssim_profile<T: Real>(
    block_bits: &Grid<u64>,
    block_size: usize,
    ssim: &Grid<T>,
) -> Result<BitsSsimProfile<T>> {
    let (w, h) = (ssim.width(), ssim.height());
    if block_size == 0 || block_bits.width() != w.div_ceil(block_size) || block_bits.height() != h.div_ceil(block_size)
    {
        return Err(contract("block grid does not tile the SSIM map"));
    }
    let mut bits = vec![0u64; w];
    for by in 0..block_bits.height() {
        for bx in 0..block_bits.width() {
            let x0 = bx * block_size;
            let cols = block_size.min(w - x0) as u64;
            let b = block_bits.get(bx, by);
            let (share, rem) = (b / cols, b % cols);
            for (i, col) in bits[x0..x0 + cols as usize].iter_mut().enumerate() {
                *col += share + u64::from((i as u64) < rem);
            }
        }
    }
    let hn = T::from_usize_lossy(h);
    let ssim = (0..w)
        .map(|x| (0..h).map(|y| ssim.get(x, y)).sum::<T>() / hn)
        .collect();
    Ok(BitsSsimProfile { bits, ssim })
}

/// Mean of `map` over pixels whose eccentricity lies in `[lo, hi]` degrees.
/// `None` when no pixel qualifies.
pub fn eccentricity_band_mean<T: Real>(
    map: &Grid<T>,
    gaze: Gaze,
    geom: &DisplayGeometry<T>,
    lo: T,
    hi: T,
) -> Option<T> {
    let g = gaze.as_real::<T>();
    let mut sum = T::zero();
    let mut n = 0usize;
    for y in 0..map.height() {
        for x in 0..map.width() {
            let e = eccentricity((T::from_usize_lossy(x), T::from_usize_lossy(y)), g, geom);
            if e >= lo && e <= hi {
                sum = sum + map.get(x, y);
                n += 1;
            }
        }
    }
    (n > 0).then(|| sum / T::from_usize_lossy(n))
}
