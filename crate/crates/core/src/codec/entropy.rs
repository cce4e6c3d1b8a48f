//! Coefficient block coding.
//!
//! A block starts with a one-bit coded flag; `0` means the block is all zero
//! and nothing else follows. Otherwise coefficients are sent in zigzag order
//! as signed Exp-Golomb values, and every non-zero value is followed by a
//! one-bit end-of-block marker that is set on the last non-zero coefficient.

use crate::codec::bits::{BitReader, BitWriter};
use crate::codec::transform::Block;
use crate::error::{bitstream, Result};

/// Zigzag scan: position `i` of the scan reads `block[ZIGZAG[i]]`.
pub const ZIGZAG: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27,
    20, 13, 6, 7, 14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58,
    59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
];

pub fn write_block(w: &mut BitWriter, q: &Block) {
    let Some(last) = ZIGZAG.iter().rposition(|&i| q[i] != 0) else {
        w.write_bit(false);
        return;
    };
    w.write_bit(true);
    for (scan, &i) in ZIGZAG.iter().enumerate().take(last + 1) {
        w.write_se(q[i]);
        if q[i] != 0 {
            w.write_bit(scan == last);
        }
    }
}

pub fn read_block(r: &mut BitReader<'_>) -> Result<Block> {
    let mut q = [0; 64];
    if !r.read_bit()? {
        return Ok(q);
    }
    let start = r.byte_offset();
    for &i in ZIGZAG.iter() {
        let v = r.read_se()?;
        q[i] = v;
        if v != 0 && r.read_bit()? {
            return Ok(q);
        }
    }
    Err(bitstream(start, "block has no end-of-block marker"))
}

/// Code a single block into a byte-aligned buffer.
pub fn entropy_encode(q: &Block) -> Vec<u8> {
    let mut w = BitWriter::new();
    write_block(&mut w, q);
    w.finish()
}

pub fn entropy_decode(bytes: &[u8]) -> Result<Block> {
    let mut r = BitReader::new(bytes);
    let q = read_block(&mut r)?;
    r.expect_end()?;
    Ok(q)
}
