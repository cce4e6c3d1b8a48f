//! Spatially displaced frame differences.
//!
//! Instead of searching for motion vectors, every frame is differenced
//! against a fixed catalogue of 13 shifted copies of the previous
//! reconstruction: no shift, plus shifts of 3, 5 and 7 pixels in both
//! directions along each axis. The encoder keeps, per block, whichever
//! shifted difference has the least energy.

use std::fmt;

use crate::error::{contract, Result};
use crate::video::FramePlane;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    None,
    Horizontal,
    Vertical,
}

/// One member of the fixed displacement catalogue.
///
/// A horizontal displacement `s` differences pixel `(row, col)` against
/// `prev(row, col - s)`; a vertical one against `prev(row - s, col)`. Content
/// panning right by `s` pixels per frame is therefore matched exactly by
/// `Horizontal, +s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Displacement {
    axis: Axis,
    s: i8,
}

const MAGNITUDES: [i8; 3] = [3, 5, 7];

impl Displacement {
    pub const ZERO: Displacement = Displacement {
        axis: Axis::None,
        s: 0,
    };

    /// Canonical ordering: zero first, then each axis with `s` ascending.
    /// The position in this array is the displacement's bitstream index.
    pub const CATALOGUE: [Displacement; 13] = {
        const fn d(axis: Axis, s: i8) -> Displacement {
            Displacement { axis, s }
        }
        use Axis::*;
        [
            d(None, 0),
            d(Horizontal, -7),
            d(Horizontal, -5),
            d(Horizontal, -3),
            d(Horizontal, 3),
            d(Horizontal, 5),
            d(Horizontal, 7),
            d(Vertical, -7),
            d(Vertical, -5),
            d(Vertical, -3),
            d(Vertical, 3),
            d(Vertical, 5),
            d(Vertical, 7),
        ]
    };

    pub fn new(axis: Axis, s: i8) -> Result<Self> {
        let ok = match axis {
            Axis::None => s == 0,
            _ => s != i8::MIN && MAGNITUDES.contains(&s.abs()),
        };
        if ok {
            Ok(Self { axis, s })
        } else {
            Err(contract(format!("displacement {axis:?} {s} is not in the catalogue")))
        }
    }

    pub fn horizontal(s: i8) -> Result<Self> {
        Self::new(Axis::Horizontal, s)
    }

    pub fn vertical(s: i8) -> Result<Self> {
        Self::new(Axis::Vertical, s)
    }

    pub fn axis(self) -> Axis {
        self.axis
    }

    pub fn shift(self) -> i8 {
        self.s
    }

    /// Index into [`Displacement::CATALOGUE`].
    pub fn index(self) -> u8 {
        Self::CATALOGUE
            .iter()
            .position(|&d| d == self)
            .expect("catalogue member") as u8
    }

    pub fn from_index(i: u8) -> Option<Self> {
        Self::CATALOGUE.get(i as usize).copied()
    }

    /// Selection tie-break rank: zero, then horizontal before vertical,
    /// smaller magnitude first, positive before negative.
    pub fn tie_rank(self) -> u8 {
        let axis = match self.axis {
            Axis::None => return 0,
            Axis::Horizontal => 0,
            Axis::Vertical => 6,
        };
        let mag = MAGNITUDES
            .iter()
            .position(|&m| m == self.s.abs())
            .expect("catalogue magnitude") as u8;
        1 + axis + 2 * mag + u8::from(self.s < 0)
    }

    /// Offset `(dx, dy)` added to a pixel position to find its source in the
    /// previous frame.
    pub fn source_offset(self) -> (isize, isize) {
        let s = self.s as isize;
        match self.axis {
            Axis::None => (0, 0),
            Axis::Horizontal => (-s, 0),
            Axis::Vertical => (0, -s),
        }
    }

    /// Source offset for a 4:2:0 chroma plane: the shift halved, rounded
    /// toward zero.
    pub fn chroma_source_offset(self) -> (isize, isize) {
        let (dx, dy) = self.source_offset();
        (dx / 2, dy / 2)
    }
}

impl Default for Displacement {
    fn default() -> Self {
        Self::ZERO
    }
}

impl fmt::Display for Displacement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.axis {
            Axis::None => write!(f, "0"),
            Axis::Horizontal => write!(f, "H{:+}", self.s),
            Axis::Vertical => write!(f, "V{:+}", self.s),
        }
    }
}

/// Signed residual plane; samples lie in [-255, 255].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidualPlane {
    width: usize,
    height: usize,
    samples: Vec<i16>,
}

impl ResidualPlane {
    pub fn new(width: usize, height: usize, samples: Vec<i16>) -> Result<Self> {
        if samples.len() != width * height {
            return Err(contract(format!(
                "residual has {} samples, expected {}",
                samples.len(),
                width * height
            )));
        }
        if let Some(v) = samples.iter().find(|v| !(-255..=255).contains(*v)) {
            return Err(contract(format!("residual sample {v} out of range")));
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            samples: vec![0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> i16 {
        self.samples[y * self.width + x]
    }

    #[inline]
    pub(crate) fn set(&mut self, x: usize, y: usize, v: i16) {
        debug_assert!((-255..=255).contains(&v));
        self.samples[y * self.width + x] = v;
    }

    pub fn samples(&self) -> &[i16] {
        &self.samples
    }

    pub fn abs_sum(&self) -> u64 {
        self.samples.iter().map(|&v| v.unsigned_abs() as u64).sum()
    }

    /// Sum of squares over the block at `(x0, y0)` clipped to the plane.
    pub fn block_sse(&self, x0: usize, y0: usize, size: usize) -> u64 {
        let x1 = (x0 + size).min(self.width);
        let y1 = (y0 + size).min(self.height);
        let mut acc = 0u64;
        for y in y0..y1 {
            let row = &self.samples[y * self.width + x0..y * self.width + x1];
            acc += row.iter().map(|&v| (v as i64 * v as i64) as u64).sum::<u64>();
        }
        acc
    }
}

fn check_dims(a: &FramePlane, b: &FramePlane) -> Result<()> {
    if a.same_dims(b) {
        Ok(())
    } else {
        Err(contract(format!(
            "plane dimensions differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )))
    }
}

/// `cur - prev` with `prev` read through displacement `d`, replicate-padded.
pub fn displaced_difference(
    cur: &FramePlane,
    prev_recon: &FramePlane,
    d: Displacement,
) -> Result<ResidualPlane> {
    check_dims(cur, prev_recon)?;
    let (dx, dy) = d.source_offset();
    Ok(difference_with_offset(cur, prev_recon, dx, dy))
}

fn difference_with_offset(cur: &FramePlane, prev: &FramePlane, dx: isize, dy: isize) -> ResidualPlane {
    let (w, h) = (cur.width(), cur.height());
    let mut samples = Vec::with_capacity(w * h);
    for y in 0..h {
        let sy = y as isize + dy;
        for x in 0..w {
            let p = prev.get_clamped(x as isize + dx, sy);
            samples.push(cur.get(x, y) as i16 - p as i16);
        }
    }
    ResidualPlane {
        width: w,
        height: h,
        samples,
    }
}

/// All 13 displaced differences for one frame pair, in catalogue order.
#[derive(Debug, Clone)]
pub struct DisplacedResidualSet {
    planes: Vec<ResidualPlane>,
}

impl DisplacedResidualSet {
    pub fn get(&self, d: Displacement) -> &ResidualPlane {
        &self.planes[d.index() as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Displacement, &ResidualPlane)> {
        Displacement::CATALOGUE.iter().copied().zip(self.planes.iter())
    }

    pub fn width(&self) -> usize {
        self.planes[0].width
    }

    pub fn height(&self) -> usize {
        self.planes[0].height
    }
}

pub fn residual_set(cur: &FramePlane, prev_recon: &FramePlane) -> Result<DisplacedResidualSet> {
    check_dims(cur, prev_recon)?;
    let planes = Displacement::CATALOGUE
        .iter()
        .map(|d| {
            let (dx, dy) = d.source_offset();
            difference_with_offset(cur, prev_recon, dx, dy)
        })
        .collect();
    Ok(DisplacedResidualSet { planes })
}

/// One displacement per `block_size` square block, covering the frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisplacementField {
    block_size: usize,
    cols: usize,
    rows: usize,
    choices: Vec<Displacement>,
}

impl DisplacementField {
    pub fn uniform(width: usize, height: usize, block_size: usize, d: Displacement) -> Result<Self> {
        if block_size == 0 {
            return Err(contract("block size must be at least 1"));
        }
        let cols = width.div_ceil(block_size);
        let rows = height.div_ceil(block_size);
        Ok(Self {
            block_size,
            cols,
            rows,
            choices: vec![d; cols * rows],
        })
    }

    pub fn from_choices(
        block_size: usize,
        cols: usize,
        rows: usize,
        choices: Vec<Displacement>,
    ) -> Result<Self> {
        if block_size == 0 || choices.len() != cols * rows {
            return Err(contract("displacement field shape mismatch"));
        }
        Ok(Self {
            block_size,
            cols,
            rows,
            choices,
        })
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn get(&self, bx: usize, by: usize) -> Displacement {
        self.choices[by * self.cols + bx]
    }

    pub fn choices(&self) -> &[Displacement] {
        &self.choices
    }

    fn covers(&self, width: usize, height: usize) -> bool {
        self.cols == width.div_ceil(self.block_size) && self.rows == height.div_ceil(self.block_size)
    }
}

/// Per block, the displacement with the smallest sum of squared residuals.
pub fn select_displacement_per_block(
    set: &DisplacedResidualSet,
    block_size: usize,
) -> Result<DisplacementField> {
    let mut field = DisplacementField::uniform(set.width(), set.height(), block_size, Displacement::ZERO)?;
    for by in 0..field.rows {
        for bx in 0..field.cols {
            let (x0, y0) = (bx * block_size, by * block_size);
            let best = set
                .iter()
                .map(|(d, plane)| (plane.block_sse(x0, y0, block_size), d.tie_rank(), d))
                .min_by_key(|&(sse, rank, _)| (sse, rank))
                .map(|(_, _, d)| d)
                .expect("catalogue is not empty");
            field.choices[by * field.cols + bx] = best;
        }
    }
    Ok(field)
}

/// Prediction of a plane from `prev` where each `block` x `block` region
/// reads through its own source offset.
pub(crate) fn predict_plane(
    prev: &FramePlane,
    block: usize,
    cols: usize,
    offset: impl Fn(usize, usize) -> (isize, isize),
) -> Vec<u8> {
    let (w, h) = (prev.width(), prev.height());
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let by = y / block;
        for x in 0..w {
            let bx = x / block;
            debug_assert!(bx < cols);
            let (dx, dy) = offset(bx, by);
            out.push(prev.get_clamped(x as isize + dx, y as isize + dy));
        }
    }
    out
}

pub(crate) fn add_residual(prediction: &[u8], residual: &ResidualPlane) -> Vec<u8> {
    prediction
        .iter()
        .zip(residual.samples())
        .map(|(&p, &r)| (p as i16 + r).clamp(0, 255) as u8)
        .collect()
}

/// Inverse of the displaced difference: shifted previous frame plus residual,
/// clamped to 8 bits.
pub fn reconstruct_frame(
    prev_recon: &FramePlane,
    field: &DisplacementField,
    decoded_residual: &ResidualPlane,
) -> Result<FramePlane> {
    let (w, h) = (prev_recon.width(), prev_recon.height());
    if decoded_residual.width != w || decoded_residual.height != h {
        return Err(contract("residual and reference dimensions differ"));
    }
    if !field.covers(w, h) {
        return Err(contract("displacement field does not cover the frame"));
    }
    let pred = predict_plane(prev_recon, field.block_size, field.cols, |bx, by| {
        field.get(bx, by).source_offset()
    });
    FramePlane::new(w, h, add_residual(&pred, decoded_residual))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane(w: usize, h: usize, f: impl FnMut(usize, usize) -> u8) -> FramePlane {
        FramePlane::from_fn(w, h, f).unwrap()
    }

    fn texture(x: isize, y: isize) -> u8 {
        let h = (x.wrapping_mul(7919) ^ y.wrapping_mul(104729)).wrapping_mul(2654435761) >> 7;
        (h & 0xff) as u8
    }

    #[test]
    fn catalogue_shape() {
        let cat = Displacement::CATALOGUE;
        assert_eq!(cat.len(), 13);
        assert_eq!(cat.iter().filter(|d| d.axis() == Axis::Horizontal).count(), 6);
        assert_eq!(cat.iter().filter(|d| d.axis() == Axis::Vertical).count(), 6);
        for (i, d) in cat.iter().enumerate() {
            assert_eq!(d.index() as usize, i);
            assert_eq!(Displacement::new(d.axis(), d.shift()).unwrap(), *d);
        }
        let mut ranks: Vec<u8> = cat.iter().map(|d| d.tie_rank()).collect();
        ranks.sort();
        assert_eq!(ranks, (0..13).collect::<Vec<_>>());
        assert!(Displacement::new(Axis::None, 3).is_err());
        assert!(Displacement::new(Axis::Horizontal, 0).is_err());
        assert!(Displacement::new(Axis::Vertical, 4).is_err());
    }

    #[test]
    fn tie_rank_order() {
        let h = |s| Displacement::horizontal(s).unwrap();
        let v = |s| Displacement::vertical(s).unwrap();
        let order = [Displacement::ZERO, h(3), h(-3), h(5), h(-5), h(7), h(-7), v(3), v(-3), v(5), v(-5), v(7), v(-7)];
        for (rank, d) in order.iter().enumerate() {
            assert_eq!(d.tie_rank() as usize, rank, "{d}");
        }
    }

    #[test]
    fn identical_frames_give_zero_residuals() {
        let a = plane(16, 12, |x, y| texture(x as isize, y as isize));
        let set = residual_set(&a, &a).unwrap();
        assert_eq!(set.get(Displacement::ZERO).abs_sum(), 0);
        let field = select_displacement_per_block(&set, 8).unwrap();
        assert!(field.choices().iter().all(|&d| d == Displacement::ZERO));
    }

    #[test]
    fn single_pixel_frames() {
        let cur = plane(1, 1, |_, _| 200);
        let prev = plane(1, 1, |_, _| 55);
        for d in Displacement::CATALOGUE {
            assert_eq!(displaced_difference(&cur, &prev, d).unwrap().samples(), &[145]);
        }
    }

    #[test]
    fn rightward_pan_matches_positive_horizontal() {
        let prev = plane(32, 16, |x, y| texture(x as isize, y as isize));
        let cur = plane(32, 16, |x, y| prev.get_clamped(x as isize - 3, y as isize));
        let r = displaced_difference(&cur, &prev, Displacement::horizontal(3).unwrap()).unwrap();
        for y in 0..16 {
            for x in 0..32 {
                assert_eq!(r.get(x, y), 0);
            }
        }
    }

    #[test]
    fn vertical_shift_convention() {
        let prev = plane(8, 32, |x, y| texture(x as isize, y as isize));
        let cur = plane(8, 32, |x, y| prev.get_clamped(x as isize, y as isize - 5));
        let r = displaced_difference(&cur, &prev, Displacement::vertical(5).unwrap()).unwrap();
        assert_eq!(r.abs_sum(), 0);
    }

    #[test]
    fn dimension_mismatch() {
        let a = plane(4, 4, |_, _| 0);
        let b = plane(4, 5, |_, _| 0);
        assert!(displaced_difference(&a, &b, Displacement::ZERO).is_err());
        assert!(residual_set(&a, &b).is_err());
    }

    #[test]
    fn zero_block_size_rejected() {
        let a = plane(4, 4, |_, _| 0);
        let set = residual_set(&a, &a).unwrap();
        assert!(select_displacement_per_block(&set, 0).is_err());
    }

    #[test]
    fn reconstruct_zero_residual_is_reference() {
        let prev = plane(10, 9, |x, y| texture(x as isize, y as isize));
        let field = DisplacementField::uniform(10, 9, 8, Displacement::ZERO).unwrap();
        let out = reconstruct_frame(&prev, &field, &ResidualPlane::zeros(10, 9)).unwrap();
        assert_eq!(out, prev);
    }

    #[test]
    fn reconstruct_rejects_short_field() {
        let prev = plane(16, 16, |_, _| 1);
        let field = DisplacementField::uniform(8, 8, 8, Displacement::ZERO).unwrap();
        assert!(reconstruct_frame(&prev, &field, &ResidualPlane::zeros(16, 16)).is_err());
    }

    #[test]
    fn chroma_offsets_halve_toward_zero() {
        let got: Vec<_> = Displacement::CATALOGUE
            .iter()
            .filter(|d| d.axis() == Axis::Horizontal)
            .map(|d| d.chroma_source_offset().0)
            .collect();
        assert_eq!(got, vec![3, 2, 1, -1, -2, -3]);
    }
}
