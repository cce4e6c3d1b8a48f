//! Frame coding: displaced residuals, integer transform, level-indexed
//! quantization and Exp-Golomb coefficients.
//!
//! Payload layout (all fields MSB-first after the first three bytes):
//!
//! ```text
//! u8      level count n
//! u16 LE  q_base
//! per 8x8 luma block, raster order:
//!     4 bits  displacement index
//!     4 bits  level
//!     coefficient block
//! per 8x8 Cb block, raster order: coefficient block
//! per 8x8 Cr block, raster order: coefficient block
//! zero padding to a byte boundary
//! ```
//!
//! A chroma block is quantized at the highest level among the (up to four)
//! luma blocks it overlaps, and predicted with each luma block's
//! displacement halved.

use crate::allocation::{level_for_block, BlockRect};
use crate::codec::bits::{BitReader, BitWriter};
use crate::codec::entropy::{read_block, write_block};
use crate::codec::quant::{dequantize_coeffs, quantize_coeffs, QuantSchedule};
use crate::codec::transform::{forward_transform, inverse_transform, Block};
use crate::displacement::{
    add_residual, predict_plane, residual_set, select_displacement_per_block, Displacement,
    DisplacementField, ResidualPlane,
};
use crate::error::{bitstream, contract, Result};
use crate::foveation::LevelMap;
use crate::grid::Grid;
use crate::video::{Frame, FramePlane};

pub const BLOCK_SIZE: usize = 8;
const PREFIX_BYTES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DisplacementMode {
    /// Per-block choice among the 13 catalogue displacements.
    #[default]
    Select,
    /// Plain frame difference everywhere.
    ForceZero,
}

#[derive(Debug, Clone, Default)]
pub struct EncoderConfig {
    pub displacement: DisplacementMode,
}

/// Coded payload of one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameBitstream {
    payload: Vec<u8>,
}

impl FrameBitstream {
    pub fn new(payload: Vec<u8>) -> Self {
        Self { payload }
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn byte_len(&self) -> usize {
        self.payload.len()
    }

    pub fn bit_len(&self) -> u64 {
        self.payload.len() as u64 * 8
    }
}

/// Encoder output for one frame.
#[derive(Debug, Clone)]
pub struct EncodedFrame {
    pub bitstream: FrameBitstream,
    /// Encoder-side reconstruction; the decoder reproduces it bit-exactly.
    pub recon: Frame,
    pub field: DisplacementField,
    /// Level used for each luma block.
    pub block_levels: Grid<u8>,
    /// Payload bits attributed to each luma block. Chroma bits go to the luma
    /// blocks a chroma block overlaps, and the payload prefix and padding are
    /// spread over all blocks, so the grid sums to the payload size.
    pub block_bits: Grid<u64>,
}

/// Reference used in place of a previous reconstruction for the first frame.
pub fn mid_gray_reference(width: usize, height: usize) -> Result<Frame> {
    Frame::uniform(width, height, 128)
}

struct Layout {
    width: usize,
    height: usize,
    cols: usize,
    rows: usize,
    cw: usize,
    ch: usize,
    ccols: usize,
    crows: usize,
}

impl Layout {
    fn new(frame: &Frame) -> Self {
        let (width, height) = (frame.width(), frame.height());
        let (cw, ch) = (frame.cb.width(), frame.cb.height());
        Self {
            width,
            height,
            cols: width.div_ceil(BLOCK_SIZE),
            rows: height.div_ceil(BLOCK_SIZE),
            cw,
            ch,
            ccols: cw.div_ceil(BLOCK_SIZE),
            crows: ch.div_ceil(BLOCK_SIZE),
        }
    }

    /// Luma blocks overlapped by chroma block `(cbx, cby)`.
    fn luma_cover(&self, cbx: usize, cby: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        (2 * cby..(2 * cby + 2).min(self.rows))
            .flat_map(move |by| (2 * cbx..(2 * cbx + 2).min(self.cols)).map(move |bx| (bx, by)))
    }

    fn chroma_level(&self, levels: &Grid<u8>, cbx: usize, cby: usize) -> u8 {
        self.luma_cover(cbx, cby)
            .map(|(bx, by)| levels.get(bx, by))
            .max()
            .expect("chroma block overlaps a luma block")
    }
}

fn predictions(prev: &Frame, field: &DisplacementField) -> [Vec<u8>; 3] {
    let cols = field.cols();
    let luma = predict_plane(&prev.y, BLOCK_SIZE, cols, |bx, by| field.get(bx, by).source_offset());
    let chroma = |p: &FramePlane| {
        predict_plane(p, BLOCK_SIZE / 2, cols, |bx, by| field.get(bx, by).chroma_source_offset())
    };
    [luma, chroma(&prev.cb), chroma(&prev.cr)]
}

/// Residual of block `(bx, by)`; positions past the plane edge replicate
/// the nearest in-plane residual.
fn block_residual(cur: &FramePlane, pred: &[u8], bx: usize, by: usize) -> Block {
    let (w, h) = (cur.width(), cur.height());
    std::array::from_fn(|i| {
        let x = (bx * BLOCK_SIZE + i % BLOCK_SIZE).min(w - 1);
        let y = (by * BLOCK_SIZE + i / BLOCK_SIZE).min(h - 1);
        cur.get(x, y) as i32 - pred[y * w + x] as i32
    })
}

/// Largest dequantized magnitude the decoder accepts. Residuals within +-255
/// transform to well under 2600, so anything past this is corruption, and
/// keeping to it leaves the inverse lifts far from i32 overflow.
const MAX_DEQUANT: i64 = 1 << 15;

fn read_coded_block(r: &mut BitReader<'_>, level: u8, sched: &QuantSchedule) -> Result<Block> {
    let at = r.byte_offset();
    let q = read_block(r)?;
    let step = sched.step(level)? as i64;
    if q.iter().any(|&v| (v as i64).abs() * step > MAX_DEQUANT) {
        return Err(bitstream(at, "coefficient out of range"));
    }
    Ok(q)
}

fn reconstruct_residual(q: &Block, level: u8, sched: &QuantSchedule) -> Result<Block> {
    let rec = inverse_transform(&dequantize_coeffs(q, level, sched)?);
    Ok(rec.map(|v| v.clamp(-255, 255)))
}

fn store_block(plane: &mut ResidualPlane, bx: usize, by: usize, block: &Block) {
    let x1 = ((bx + 1) * BLOCK_SIZE).min(plane.width());
    let y1 = ((by + 1) * BLOCK_SIZE).min(plane.height());
    for y in by * BLOCK_SIZE..y1 {
        for x in bx * BLOCK_SIZE..x1 {
            plane.set(x, y, block[(y % BLOCK_SIZE) * BLOCK_SIZE + x % BLOCK_SIZE] as i16);
        }
    }
}

fn assemble(preds: &[Vec<u8>; 3], residuals: &[ResidualPlane; 3], like: &Frame) -> Result<Frame> {
    let plane = |i: usize, p: &FramePlane| FramePlane::new(p.width(), p.height(), add_residual(&preds[i], &residuals[i]));
    Frame::new(plane(0, &like.y)?, plane(1, &like.cb)?, plane(2, &like.cr)?)
}

/// Split `total` into `parts` integers differing by at most one.
fn spread(total: u64, parts: usize) -> impl Iterator<Item = u64> {
    let parts = parts as u64;
    let (q, r) = (total / parts, total % parts);
    (0..parts).map(move |i| q + u64::from(i < r))
}

pub fn encode_frame(
    cur: &Frame,
    prev_recon: &Frame,
    level_map: &LevelMap,
    sched: &QuantSchedule,
    cfg: &EncoderConfig,
) -> Result<EncodedFrame> {
    if !cur.y.same_dims(&prev_recon.y) {
        return Err(contract("current and reference frames differ in size"));
    }
    if level_map.width() != cur.width() || level_map.height() != cur.height() {
        return Err(contract("level map does not match the frame size"));
    }
    if level_map.n() != sched.n() {
        return Err(contract(format!(
            "level map has {} levels, schedule has {}",
            level_map.n(),
            sched.n()
        )));
    }
    let lay = Layout::new(cur);
    let field = match cfg.displacement {
        DisplacementMode::Select => {
            select_displacement_per_block(&residual_set(&cur.y, &prev_recon.y)?, BLOCK_SIZE)?
        }
        DisplacementMode::ForceZero => {
            DisplacementField::uniform(lay.width, lay.height, BLOCK_SIZE, Displacement::ZERO)?
        }
    };
    let mut levels = Grid::filled(lay.cols, lay.rows, 0u8);
    for by in 0..lay.rows {
        for bx in 0..lay.cols {
            let rect = BlockRect::grid_block(bx, by, BLOCK_SIZE, lay.width, lay.height);
            levels.set(bx, by, level_for_block(level_map, rect)?);
        }
    }

    let preds = predictions(prev_recon, &field);
    let mut residuals = [
        ResidualPlane::zeros(lay.width, lay.height),
        ResidualPlane::zeros(lay.cw, lay.ch),
        ResidualPlane::zeros(lay.cw, lay.ch),
    ];
    let mut bits = Grid::filled(lay.cols, lay.rows, 0u64);

    let mut prefix = vec![sched.n()];
    prefix.extend_from_slice(&sched.q_base().to_le_bytes());
    let mut w = BitWriter::with_prefix(prefix);

    for by in 0..lay.rows {
        for bx in 0..lay.cols {
            let start = w.bit_len();
            let level = levels.get(bx, by);
            w.write_bits(field.get(bx, by).index() as u64, 4);
            w.write_bits(level as u64, 4);
            let q = quantize_coeffs(
                &forward_transform(&block_residual(&cur.y, &preds[0], bx, by)),
                level,
                sched,
            )?;
            write_block(&mut w, &q);
            store_block(&mut residuals[0], bx, by, &reconstruct_residual(&q, level, sched)?);
            bits.set(bx, by, w.bit_len() - start);
        }
    }
    for (pi, plane) in [(1, &cur.cb), (2, &cur.cr)] {
        for cby in 0..lay.crows {
            for cbx in 0..lay.ccols {
                let start = w.bit_len();
                let level = lay.chroma_level(&levels, cbx, cby);
                let q = quantize_coeffs(
                    &forward_transform(&block_residual(plane, &preds[pi], cbx, cby)),
                    level,
                    sched,
                )?;
                write_block(&mut w, &q);
                store_block(&mut residuals[pi], cbx, cby, &reconstruct_residual(&q, level, sched)?);
                let cover: Vec<_> = lay.luma_cover(cbx, cby).collect();
                for ((bx, by), share) in cover.iter().zip(spread(w.bit_len() - start, cover.len())) {
                    bits.set(*bx, *by, bits.get(*bx, *by) + share);
                }
            }
        }
    }

    let payload = w.finish();
    let attributed: u64 = bits.as_slice().iter().sum();
    let overhead = payload.len() as u64 * 8 - attributed;
    for (b, share) in bits.as_mut_slice().iter_mut().zip(spread(overhead, lay.cols * lay.rows)) {
        *b += share;
    }

    let recon = assemble(&preds, &residuals, cur)?;
    Ok(EncodedFrame {
        bitstream: FrameBitstream::new(payload),
        recon,
        field,
        block_levels: levels,
        block_bits: bits,
    })
}

/// Rebuild a frame from its payload and the previous reconstruction.
pub fn decode_frame(bits: &FrameBitstream, prev_recon: &Frame) -> Result<Frame> {
    decode_frame_at(bits, prev_recon, 0)
}

/// As [`decode_frame`], reporting error offsets relative to `base`.
pub(crate) fn decode_frame_at(bits: &FrameBitstream, prev_recon: &Frame, base: usize) -> Result<Frame> {
    let data = bits.payload();
    if data.is_empty() {
        return Err(contract("empty frame payload"));
    }
    if data.len() < PREFIX_BYTES {
        return Err(bitstream(base + data.len(), "frame payload shorter than its prefix"));
    }
    let n = data[0];
    let q_base = u16::from_le_bytes([data[1], data[2]]);
    let sched = QuantSchedule::new(n, q_base)
        .map_err(|e| bitstream(base, format!("bad quantizer prefix: {e}")))?;
    let lay = Layout::new(prev_recon);
    let mut r = BitReader::with_base(&data[PREFIX_BYTES..], base + PREFIX_BYTES);

    let mut choices = Vec::with_capacity(lay.cols * lay.rows);
    let mut levels = Grid::filled(lay.cols, lay.rows, 0u8);
    let mut residuals = [
        ResidualPlane::zeros(lay.width, lay.height),
        ResidualPlane::zeros(lay.cw, lay.ch),
        ResidualPlane::zeros(lay.cw, lay.ch),
    ];
    for by in 0..lay.rows {
        for bx in 0..lay.cols {
            let off = r.byte_offset();
            let idx = r.read_bits(4)? as u8;
            let d = Displacement::from_index(idx)
                .ok_or_else(|| bitstream(off, format!("displacement index {idx}")))?;
            let level = r.read_bits(4)? as u8;
            if level >= n {
                return Err(bitstream(off, format!("level {level} with {n} levels")));
            }
            let q = read_coded_block(&mut r, level, &sched)?;
            store_block(&mut residuals[0], bx, by, &reconstruct_residual(&q, level, &sched)?);
            choices.push(d);
            levels.set(bx, by, level);
        }
    }
    for plane in [1, 2] {
        for cby in 0..lay.crows {
            for cbx in 0..lay.ccols {
                let level = lay.chroma_level(&levels, cbx, cby);
                let q = read_coded_block(&mut r, level, &sched)?;
                store_block(&mut residuals[plane], cbx, cby, &reconstruct_residual(&q, level, &sched)?);
            }
        }
    }
    r.expect_end()?;

    let field = DisplacementField::from_choices(BLOCK_SIZE, lay.cols, lay.rows, choices)?;
    assemble(&predictions(prev_recon, &field), &residuals, prev_recon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn textured(w: usize, h: usize, shift: isize) -> Frame {
        let y = FramePlane::from_fn(w, h, |x, y| {
            let x = x as isize - shift;
            let v = 128.0 + 60.0 * ((x as f64) * 0.37).sin() * ((y as f64) * 0.23).cos()
                + 30.0 * ((x as f64 + y as f64) * 0.11).sin();
            v.round().clamp(0.0, 255.0) as u8
        })
        .unwrap();
        Frame::from_luma(y).unwrap()
    }

    #[test]
    fn spread_conserves() {
        assert_eq!(spread(10, 4).collect::<Vec<_>>(), vec![3, 3, 2, 2]);
        assert_eq!(spread(3, 4).sum::<u64>(), 3);
    }

    #[test]
    fn first_frame_lockstep_and_determinism() {
        let cur = textured(37, 21, 0);
        let prev = mid_gray_reference(37, 21).unwrap();
        let lm = LevelMap::uniform(37, 21, 15, 16).unwrap();
        let sched = QuantSchedule::default();
        let a = encode_frame(&cur, &prev, &lm, &sched, &EncoderConfig::default()).unwrap();
        let b = encode_frame(&cur, &prev, &lm, &sched, &EncoderConfig::default()).unwrap();
        assert_eq!(a.bitstream, b.bitstream);
        assert_eq!(decode_frame(&a.bitstream, &prev).unwrap(), a.recon);
        assert_eq!(a.block_bits.as_slice().iter().sum::<u64>(), a.bitstream.bit_len());
    }

    #[test]
    fn empty_and_truncated_payloads() {
        let prev = mid_gray_reference(16, 16).unwrap();
        assert!(matches!(
            decode_frame(&FrameBitstream::new(Vec::new()), &prev),
            Err(Error::ContractViolation(_))
        ));
        let cur = textured(16, 16, 0);
        let lm = LevelMap::uniform(16, 16, 15, 16).unwrap();
        let enc = encode_frame(&cur, &prev, &lm, &QuantSchedule::default(), &EncoderConfig::default()).unwrap();
        let mut cut = enc.bitstream.payload().to_vec();
        cut.truncate(cut.len() / 2);
        assert!(matches!(
            decode_frame(&FrameBitstream::new(cut), &prev),
            Err(Error::Bitstream { .. })
        ));
        let mut extra = enc.bitstream.payload().to_vec();
        extra.push(0);
        assert!(decode_frame(&FrameBitstream::new(extra), &prev).is_err());
    }

    #[test]
    fn level_map_mismatch() {
        let cur = textured(16, 16, 0);
        let prev = mid_gray_reference(16, 16).unwrap();
        let sched = QuantSchedule::default();
        let cfg = EncoderConfig::default();
        let small = LevelMap::uniform(8, 16, 15, 16).unwrap();
        assert!(encode_frame(&cur, &prev, &small, &sched, &cfg).is_err());
        let eight = LevelMap::uniform(16, 16, 7, 8).unwrap();
        assert!(encode_frame(&cur, &prev, &eight, &sched, &cfg).is_err());
    }

    #[test]
    fn pan_uses_displacement() {
        let prev_src = textured(64, 32, 0);
        let cur = textured(64, 32, 3);
        let lm = LevelMap::uniform(64, 32, 15, 16).unwrap();
        let sched = QuantSchedule::default();
        let enc = encode_frame(&cur, &prev_src, &lm, &sched, &EncoderConfig::default()).unwrap();
        let h3 = Displacement::horizontal(3).unwrap();
        assert!(enc.field.choices().iter().filter(|&&d| d == h3).count() >= 8);
        assert_eq!(decode_frame(&enc.bitstream, &prev_src).unwrap(), enc.recon);
    }
}
