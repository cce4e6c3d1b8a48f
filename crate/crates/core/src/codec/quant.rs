//! Foveation-level quantizer.

use crate::codec::transform::Block;
use crate::error::{contract, Result};

/// Per-level quantizer steps: `steps[l] = max(1, round(q_base * 2^((n-1-l)/2)))`.
///
/// Steps are derived with integer arithmetic only so the schedule is
/// identical on every platform.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantSchedule {
    n: u8,
    q_base: u16,
    steps: Vec<u32>,
}

fn round_sqrt(v: u64) -> u64 {
    let r = v.isqrt();
    // round(sqrt(v)) = r + 1 iff v >= (r + 1/2)^2, i.e. v > r^2 + r
    if v > r * r + r {
        r + 1
    } else {
        r
    }
}

impl QuantSchedule {
    pub const DEFAULT_Q_BASE: u16 = 4;

    pub fn new(n: u8, q_base: u16) -> Result<Self> {
        if !(2..=16).contains(&n) {
            return Err(contract(format!("level count {n} outside 2..=16")));
        }
        if q_base == 0 {
            return Err(contract("q_base must be at least 1"));
        }
        let q = q_base as u64;
        let steps = (0..n)
            .map(|l| {
                let k = (n - 1 - l) as u32;
                let step = if k.is_multiple_of(2) {
                    q << (k / 2)
                } else {
                    // q * sqrt(2) * 2^((k-1)/2) = sqrt(2 * q^2 * 4^((k-1)/2))
                    round_sqrt((2 * q * q) << (k - 1))
                };
                step.clamp(1, u32::MAX as u64) as u32
            })
            .collect();
        Ok(Self { n, q_base, steps })
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    pub fn q_base(&self) -> u16 {
        self.q_base
    }

    pub fn steps(&self) -> &[u32] {
        &self.steps
    }

    pub fn step(&self, level: u8) -> Result<u32> {
        self.steps
            .get(level as usize)
            .copied()
            .ok_or_else(|| contract(format!("level {level} outside [0, {}]", self.n - 1)))
    }
}

impl Default for QuantSchedule {
    fn default() -> Self {
        Self::new(16, Self::DEFAULT_Q_BASE).expect("valid defaults")
    }
}

/// Round-half-away-from-zero division.
#[inline]
fn div_round(c: i32, step: u32) -> i32 {
    let mag = (2 * c.unsigned_abs() as u64 + step as u64) / (2 * step as u64);
    if c < 0 {
        -(mag as i32)
    } else {
        mag as i32
    }
}

pub fn quantize_coeffs(coeffs: &Block, level: u8, sched: &QuantSchedule) -> Result<Block> {
    let step = sched.step(level)?;
    Ok(coeffs.map(|c| div_round(c, step)))
}

pub fn dequantize_coeffs(q: &Block, level: u8, sched: &QuantSchedule) -> Result<Block> {
    let step = sched.step(level)? as i64;
    Ok(q.map(|v| (v as i64 * step).clamp(i32::MIN as i64, i32::MAX as i64) as i32))
}
