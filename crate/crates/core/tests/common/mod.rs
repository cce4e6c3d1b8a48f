//! Deterministic synthetic content shared by the integration suites.

#![allow(dead_code)]

use foveacodec::codec::FrameGuide;
use foveacodec::foveation::{gaussian_map, Gaze, LevelMap};
use foveacodec::video::{Frame, FramePlane, FrameRate, VideoSequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn hash(x: i64, y: i64, seed: u64) -> f64 {
    let mut h = (x as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (y as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ seed.wrapping_mul(0x1656_67B1_9E37_79F9);
    h ^= h >> 31;
    h = h.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    h ^= h >> 29;
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn value_noise(x: f64, y: f64, seed: u64) -> f64 {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let s = |t: f64| t * t * (3.0 - 2.0 * t);
    let (sx, sy) = (s(fx), s(fy));
    let (ix, iy) = (x0 as i64, y0 as i64);
    let a = hash(ix, iy, seed);
    let b = hash(ix + 1, iy, seed);
    let c = hash(ix, iy + 1, seed);
    let d = hash(ix + 1, iy + 1, seed);
    let top = a + (b - a) * sx;
    let bot = c + (d - c) * sx;
    top + (bot - top) * sy
}

/// Multi-octave texture with a few hard edges, defined on the whole plane.
pub fn texture(x: f64, y: f64, seed: u64) -> u8 {
    let mut v = 0.0;
    let mut amp = 0.5;
    let mut period = 48.0;
    for o in 0..6 {
        v += amp * value_noise(x / period, y / period, seed + o);
        amp *= 0.6;
        period /= 2.0;
    }
    // blocky "objects" give the texture the sharp edges real footage has
    if value_noise(x / 40.0, y / 40.0, seed + 99) > 0.62 {
        v += 0.35;
    }
    (16.0 + v * 170.0).round().clamp(0.0, 255.0) as u8
}

/// Frame `t` of a pan moving content `(vx, vy)` pixels per frame, so that
/// `cur(x, y) = prev(x - vx, y - vy)`.
pub fn pan_frame(w: usize, h: usize, t: usize, vx: i64, vy: i64, seed: u64) -> Frame {
    let ox = vx * t as i64;
    let oy = vy * t as i64;
    let y = FramePlane::from_fn(w, h, |x, y| texture((x as i64 - ox) as f64, (y as i64 - oy) as f64, seed)).unwrap();
    let (cw, ch) = foveacodec::video::chroma_dims(w, h);
    let cb = FramePlane::from_fn(cw, ch, |x, y| {
        texture((2 * x as i64 - ox) as f64 * 0.5, (2 * y as i64 - oy) as f64 * 0.5, seed + 7) / 2 + 64
    })
    .unwrap();
    let cr = FramePlane::from_fn(cw, ch, |x, y| {
        texture((2 * x as i64 - ox) as f64 * 0.5, (2 * y as i64 - oy) as f64 * 0.5, seed + 13) / 2 + 64
    })
    .unwrap();
    Frame::new(y, cb, cr).unwrap()
}

pub fn pan_clip(w: usize, h: usize, frames: usize, vx: i64, vy: i64, seed: u64) -> VideoSequence {
    let f = (0..frames).map(|t| pan_frame(w, h, t, vx, vy, seed)).collect();
    VideoSequence::new(f, FrameRate::default()).unwrap()
}

/// Stand-in for natural footage: textured scene with a slow diagonal pan.
pub fn natural_clip(frames: usize) -> VideoSequence {
    pan_clip(352, 288, frames, 2, 1, 2024)
}

pub fn random_plane(rng: &mut ChaCha8Rng, w: usize, h: usize) -> FramePlane {
    FramePlane::from_fn(w, h, |_, _| rng.gen()).unwrap()
}

pub fn random_frame(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Frame {
    let (cw, ch) = foveacodec::video::chroma_dims(w, h);
    Frame::new(random_plane(rng, w, h), random_plane(rng, cw, ch), random_plane(rng, cw, ch)).unwrap()
}

/// Random clip mixing smooth texture and noise, so both flat and busy blocks
/// occur.
pub fn random_clip(seed: u64, w: usize, h: usize, frames: usize) -> VideoSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vx = rng.gen_range(-7..=7);
    let vy = rng.gen_range(-7..=7);
    let f = (0..frames)
        .map(|t| {
            let base = pan_frame(w, h, t, vx, vy, seed);
            let noise = random_frame(&mut rng, w, h);
            let amp: i32 = rng.gen_range(0..=64);
            let mix = |a: &FramePlane, n: &FramePlane| {
                FramePlane::from_fn(a.width(), a.height(), |x, y| {
                    let d = (n.get(x, y) as i32 - 128) * amp / 128;
                    (a.get(x, y) as i32 + d).clamp(0, 255) as u8
                })
                .unwrap()
            };
            Frame::new(mix(&base.y, &noise.y), mix(&base.cb, &noise.cb), mix(&base.cr, &noise.cr)).unwrap()
        })
        .collect();
    VideoSequence::new(f, FrameRate::default()).unwrap()
}

pub fn gaussian_guides(seq: &VideoSequence, gaze: Gaze, fmsc: f64, code: u8) -> Vec<FrameGuide> {
    let map = gaussian_map::<f64>(gaze, fmsc, seq.width(), seq.height()).unwrap();
    let g = FrameGuide::from_map(&map, LevelMap::DEFAULT_LEVELS, code).unwrap();
    vec![g; seq.len()]
}

pub fn uniform_guides(seq: &VideoSequence, level: u8) -> Vec<FrameGuide> {
    let levels = LevelMap::uniform(seq.width(), seq.height(), level, LevelMap::DEFAULT_LEVELS).unwrap();
    let g = FrameGuide {
        gaze: Gaze::center(seq.width(), seq.height()),
        fmsc_code: 0,
        levels,
    };
    vec![g; seq.len()]
}
