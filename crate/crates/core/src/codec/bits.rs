//! MSB-first bit I/O with Exp-Golomb codes.

use crate::error::{bitstream, Result};

/// Longest accepted Exp-Golomb prefix.
const MAX_LEADING_ZEROS: u32 = 32;

#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    acc: u8,
    used: u8,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Writer that appends to an existing byte prefix.
    pub fn with_prefix(prefix: Vec<u8>) -> Self {
        Self {
            bytes: prefix,
            acc: 0,
            used: 0,
        }
    }

    #[inline]
    pub fn write_bit(&mut self, bit: bool) {
        self.acc = (self.acc << 1) | bit as u8;
        self.used += 1;
        if self.used == 8 {
            self.bytes.push(self.acc);
            self.acc = 0;
            self.used = 0;
        }
    }

    pub fn write_bits(&mut self, value: u64, n: u32) {
        debug_assert!(n <= 64);
        for i in (0..n).rev() {
            self.write_bit((value >> i) & 1 == 1);
        }
    }

    /// Unsigned Exp-Golomb, k = 0.
    pub fn write_ue(&mut self, v: u64) {
        let x = v + 1;
        let len = 64 - x.leading_zeros();
        self.write_bits(0, len - 1);
        self.write_bits(x, len);
    }

    /// Signed Exp-Golomb with the 0, +1, -1, +2, -2, ... mapping.
    pub fn write_se(&mut self, v: i32) {
        self.write_ue(signed_to_symbol(v));
    }

    pub fn bit_len(&self) -> u64 {
        self.bytes.len() as u64 * 8 + self.used as u64
    }

    /// Zero-pad to a byte boundary and return the bytes.
    pub fn finish(mut self) -> Vec<u8> {
        if self.used > 0 {
            self.acc <<= 8 - self.used;
            self.bytes.push(self.acc);
        }
        self.bytes
    }
}

#[inline]
pub fn signed_to_symbol(v: i32) -> u64 {
    if v > 0 {
        2 * v as u64 - 1
    } else {
        2 * (v as i64).unsigned_abs()
    }
}

#[inline]
pub fn symbol_to_signed(m: u64) -> Option<i32> {
    let v = if m % 2 == 1 {
        (m / 2 + 1) as i64
    } else {
        -((m / 2) as i64)
    };
    i32::try_from(v).ok()
}

#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    data: &'a [u8],
    /// Offset of `data[0]` within the enclosing stream, for error reports.
    base: usize,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self::with_base(data, 0)
    }

    pub fn with_base(data: &'a [u8], base: usize) -> Self {
        Self { data, base, pos: 0 }
    }

    /// Byte offset (in the enclosing stream) of the next unread bit.
    pub fn byte_offset(&self) -> usize {
        self.base + self.pos / 8
    }

    pub fn bit_position(&self) -> u64 {
        self.pos as u64
    }

    #[inline]
    pub fn read_bit(&mut self) -> Result<bool> {
        let byte = self
            .data
            .get(self.pos / 8)
            .ok_or_else(|| bitstream(self.byte_offset(), "unexpected end of payload"))?;
        let bit = (byte >> (7 - self.pos % 8)) & 1 == 1;
        self.pos += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, n: u32) -> Result<u64> {
        let mut v = 0;
        for _ in 0..n {
            v = (v << 1) | self.read_bit()? as u64;
        }
        Ok(v)
    }

    pub fn read_ue(&mut self) -> Result<u64> {
        let start = self.byte_offset();
        let mut zeros = 0;
        while !self.read_bit()? {
            zeros += 1;
            if zeros > MAX_LEADING_ZEROS {
                return Err(bitstream(start, "Exp-Golomb prefix too long"));
            }
        }
        let rest = self.read_bits(zeros)?;
        Ok(((1u64 << zeros) | rest) - 1)
    }

    pub fn read_se(&mut self) -> Result<i32> {
        let start = self.byte_offset();
        let m = self.read_ue()?;
        symbol_to_signed(m).ok_or_else(|| bitstream(start, "signed value out of range"))
    }

    /// Check that only zero padding remains.
    pub fn expect_end(&mut self) -> Result<()> {
        let total = self.data.len() * 8;
        if total - self.pos >= 8 {
            return Err(bitstream(self.byte_offset(), "trailing data after last block"));
        }
        while self.pos < total {
            if self.read_bit()? {
                return Err(bitstream(self.byte_offset(), "non-zero padding bits"));
            }
        }
        Ok(())
    }
}
