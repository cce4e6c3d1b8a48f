//! Exactly invertible integer approximation of the orthonormal 8x8 DCT-II.
//!
//! Every stage of the 1-D transform is a plane rotation realized as three
//! lifting steps with Q16 fixed-point multipliers, so the integer mapping is
//! a bijection and the inverse simply runs the lifts backwards. The outer
//! butterflies are rotations by -pi/4, arranged so that two equal inputs
//! produce an exactly zero difference; a constant block therefore has no AC
//! energy at all. Output scale matches the orthonormal DCT to within a few
//! units.

pub const N: usize = 8;
pub type Block = [i32; N * N];

const Q: u32 = 16;
const HALF: i64 = 1 << (Q - 1);

/// Rotation by theta as lifts: `p = (cos - 1) / sin`, `s = sin`, both Q16.
#[derive(Clone, Copy)]
struct Lift {
    p: i64,
    s: i64,
}

/// -pi/4
const BUTTERFLY: Lift = Lift { p: 27146, s: -46341 };
/// -pi/8
const EVEN_ROTATION: Lift = Lift { p: 13036, s: -25080 };
/// Givens factorization of the odd half, in forward application order.
const ODD_ROTATIONS: [(usize, usize, Lift); 6] = [
    (2, 3, Lift { p: -24041, s: 42379 }),
    (1, 3, Lift { p: -13553, s: 25994 }),
    (1, 2, Lift { p: -36384, s: 55624 }),
    (0, 3, Lift { p: -4542, s: 9041 }),
    (0, 2, Lift { p: -13553, s: 25994 }),
    (0, 1, Lift { p: -24041, s: 42379 }),
];
const ODD_SIGNS: [i32; 4] = [-1, 1, -1, 1];

#[inline]
fn mul(c: i64, x: i32) -> i32 {
    ((c * x as i64 + HALF) >> Q) as i32
}

#[inline]
fn rot(x: i32, y: i32, l: Lift) -> (i32, i32) {
    let x = x + mul(l.p, y);
    let y = y + mul(l.s, x);
    let x = x + mul(l.p, y);
    (x, y)
}

#[inline]
fn unrot(x: i32, y: i32, l: Lift) -> (i32, i32) {
    let x = x - mul(l.p, y);
    let y = y - mul(l.s, x);
    let x = x - mul(l.p, y);
    (x, y)
}

fn forward_1d(x: [i32; N]) -> [i32; N] {
    let mut u = [0; 4];
    let mut w = [0; 4];
    for n in 0..4 {
        (u[n], w[n]) = rot(x[n], x[7 - n], BUTTERFLY);
    }
    // even half: 4-point DCT of the sums
    let (p0, m0) = rot(u[0], u[3], BUTTERFLY);
    let (p1, m1) = rot(u[1], u[2], BUTTERFLY);
    let (y0, y4) = rot(p0, p1, BUTTERFLY);
    let (a, b) = rot(m0, m1, EVEN_ROTATION);
    // odd half
    for k in 0..4 {
        w[k] *= ODD_SIGNS[k];
    }
    for (i, j, l) in ODD_ROTATIONS {
        (w[i], w[j]) = rot(w[i], w[j], l);
    }
    [y0, w[0], -a, w[1], -y4, w[2], b, w[3]]
}

fn inverse_1d(c: [i32; N]) -> [i32; N] {
    let mut w = [c[1], c[3], c[5], c[7]];
    for &(i, j, l) in ODD_ROTATIONS.iter().rev() {
        (w[i], w[j]) = unrot(w[i], w[j], l);
    }
    for k in 0..4 {
        w[k] *= ODD_SIGNS[k];
    }
    let (m0, m1) = unrot(-c[2], c[6], EVEN_ROTATION);
    let (p0, p1) = unrot(c[0], -c[4], BUTTERFLY);
    let mut u = [0; 4];
    (u[0], u[3]) = unrot(p0, m0, BUTTERFLY);
    (u[1], u[2]) = unrot(p1, m1, BUTTERFLY);
    let mut x = [0; N];
    for n in 0..4 {
        (x[n], x[7 - n]) = unrot(u[n], w[n], BUTTERFLY);
    }
    x
}

fn rows(block: &Block, f: fn([i32; N]) -> [i32; N]) -> Block {
    let mut out = [0; N * N];
    for r in 0..N {
        let mut v = [0; N];
        v.copy_from_slice(&block[r * N..r * N + N]);
        out[r * N..r * N + N].copy_from_slice(&f(v));
    }
    out
}

fn cols(block: &Block, f: fn([i32; N]) -> [i32; N]) -> Block {
    let mut out = [0; N * N];
    for c in 0..N {
        let v = std::array::from_fn(|r| block[r * N + c]);
        for (r, val) in f(v).into_iter().enumerate() {
            out[r * N + c] = val;
        }
    }
    out
}

/// Row-major 8x8 residual block to row-major coefficients
/// (`coeffs[v * 8 + u]`, `u` horizontal frequency).
pub fn forward_transform(block: &Block) -> Block {
    cols(&rows(block, forward_1d), forward_1d)
}

pub fn inverse_transform(coeffs: &Block) -> Block {
    rows(&cols(coeffs, inverse_1d), inverse_1d)
}
