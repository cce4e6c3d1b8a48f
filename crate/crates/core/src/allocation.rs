//! Turning a foveation map into coding budget.
//!
//! `expand_masks` is the nested channel-mask construction used to gate a
//! `c`-channel latent code: channel `k` belongs to group `k / (c / L)` and is
//! kept wherever the map reaches `group / L`. The block codec does not use
//! the mask stack directly; it consumes a [`LevelMap`] through
//! [`level_for_block`].

use crate::error::{contract, Result};
use crate::foveation::{FoveationMap, LevelMap};
use crate::num::Real;

/// Binary masks, `channels x height x width`, channel-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskStack {
    channels: usize,
    levels: usize,
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl MaskStack {
    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Mask value of channel `k` at pixel `(x, y)`.
    #[inline]
    pub fn get(&self, k: usize, x: usize, y: usize) -> bool {
        self.bits[(k * self.height + y) * self.width + x]
    }

    /// Number of channels switched on at `(x, y)`.
    pub fn active_channels(&self, x: usize, y: usize) -> usize {
        (0..self.channels).filter(|&k| self.get(k, x, y)).count()
    }
}

/// Expand `p` into `c` nested binary masks over `levels` groups.
pub fn expand_masks<T: Real>(p: &FoveationMap<T>, c: usize, levels: usize) -> Result<MaskStack> {
    if levels == 0 || c == 0 || !c.is_multiple_of(levels) {
        return Err(contract(format!(
            "channel count {c} is not a positive multiple of level count {levels}"
        )));
    }
    let group = c / levels;
    let step = T::one() / T::from_usize_lossy(levels);
    let (w, h) = (p.width(), p.height());
    let mut bits = Vec::with_capacity(c * w * h);
    for k in 0..c {
        let threshold = T::from_usize_lossy(k / group) * step;
        bits.extend(p.values().as_slice().iter().map(|&v| v >= threshold));
    }
    Ok(MaskStack {
        channels: c,
        levels,
        width: w,
        height: h,
        bits,
    })
}

/// Sum of the map: a continuous proxy for the coded rate.
pub fn rate_estimate<T: Real>(p: &FoveationMap<T>) -> T {
    p.values().as_slice().iter().copied().sum()
}

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockRect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl BlockRect {
    pub fn new(x: usize, y: usize, width: usize, height: usize) -> Self {
        Self { x, y, width, height }
    }

    /// The `size` square block at grid position `(bx, by)`, clipped to the frame.
    pub fn grid_block(bx: usize, by: usize, size: usize, frame_w: usize, frame_h: usize) -> Self {
        let x = bx * size;
        let y = by * size;
        Self {
            x,
            y,
            width: size.min(frame_w.saturating_sub(x)),
            height: size.min(frame_h.saturating_sub(y)),
        }
    }
}

/// Highest level inside `block`.
pub fn level_for_block(levels: &LevelMap, block: BlockRect) -> Result<u8> {
    if block.width == 0
        || block.height == 0
        || block.x + block.width > levels.width()
        || block.y + block.height > levels.height()
    {
        return Err(contract(format!(
            "block {block:?} outside {}x{} level map",
            levels.width(),
            levels.height()
        )));
    }
    let grid = levels.levels();
    let mut best = 0;
    for y in block.y..block.y + block.height {
        let row = &grid.as_slice()[y * grid.width() + block.x..y * grid.width() + block.x + block.width];
        best = best.max(*row.iter().max().expect("non-empty row"));
    }
    Ok(best)
}
