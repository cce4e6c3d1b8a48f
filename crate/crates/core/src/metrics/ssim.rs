//! SSIM maps and the foveation-weighted pooling built on them.

use crate::error::{contract, Result};
use crate::foveation::FoveationMap;
use crate::grid::Grid;
use crate::num::Real;
use crate::video::FramePlane;

pub const WINDOW_RADIUS: usize = 5;
pub const WINDOW_SIGMA: f64 = 1.5;
pub const K1: f64 = 0.01;
pub const K2: f64 = 0.03;

/// Normalized 11-tap gaussian, sigma 1.5.
pub fn gaussian_window<T: Real>() -> [T; 2 * WINDOW_RADIUS + 1] {
    let raw: [f64; 2 * WINDOW_RADIUS + 1] = std::array::from_fn(|i| {
        let d = i as f64 - WINDOW_RADIUS as f64;
        (-d * d / (2.0 * WINDOW_SIGMA * WINDOW_SIGMA)).exp()
    });
    let sum: f64 = raw.iter().sum();
    raw.map(|v| T::lit(v / sum))
}

pub fn stabilizers<T: Real>() -> (T, T) {
    let c1 = K1 * 255.0;
    let c2 = K2 * 255.0;
    (T::lit(c1 * c1), T::lit(c2 * c2))
}

/// Weighted 1-D blur along rows or columns; the window is truncated at the
/// border and its weights renormalized.
fn blur<T: Real>(src: &[T], w: usize, h: usize, kernel: &[T], horizontal: bool) -> Vec<T> {
    let r = WINDOW_RADIUS as isize;
    let mut out = Vec::with_capacity(w * h);
    let (len, pos) = if horizontal { (w, 0) } else { (h, 1) };
    for y in 0..h {
        for x in 0..w {
            let c = [x, y][pos] as isize;
            let lo = (c - r).max(0);
            let hi = (c + r).min(len as isize - 1);
            let mut acc = T::zero();
            let mut norm = T::zero();
            for t in lo..=hi {
                let k = kernel[(t - c + r) as usize];
                let v = if horizontal {
                    src[y * w + t as usize]
                } else {
                    src[t as usize * w + x]
                };
                acc = acc + k * v;
                norm = norm + k;
            }
            out.push(acc / norm);
        }
    }
    out
}

fn check_dims(a: &FramePlane, b: &FramePlane) -> Result<()> {
    if a.same_dims(b) {
        Ok(())
    } else {
        Err(contract("SSIM inputs differ in size"))
    }
}

/// Per-pixel SSIM with an 11x11 gaussian window.
pub fn ssim_map<T: Real>(reference: &FramePlane, test: &FramePlane) -> Result<Grid<T>> {
    check_dims(reference, test)?;
    let (w, h) = (reference.width(), reference.height());
    let kernel = gaussian_window::<T>();
    let to_t = |p: &FramePlane| -> Vec<T> { p.samples().iter().map(|&v| T::from_u8(v).unwrap()).collect() };
    let a = to_t(reference);
    let b = to_t(test);
    let prod = |f: fn(T, T) -> T| -> Vec<T> { a.iter().zip(&b).map(|(&x, &y)| f(x, y)).collect() };
    let filt = |s: &[T]| blur(&blur(s, w, h, &kernel, true), w, h, &kernel, false);

    let mu_a = filt(&a);
    let mu_b = filt(&b);
    let aa = filt(&prod(|x, _| x * x));
    let bb = filt(&prod(|_, y| y * y));
    let ab = filt(&prod(|x, y| x * y));

    let (c1, c2) = stabilizers::<T>();
    let two = T::lit(2.0);
    let values = (0..w * h)
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = aa[i] - ma * ma;
            let vb = bb[i] - mb * mb;
            let cov = ab[i] - ma * mb;
            ((two * ma * mb + c1) * (two * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        })
        .collect();
    Grid::from_vec(w, h, values)
}

pub fn mean<T: Real>(g: &Grid<T>) -> T {
    g.as_slice().iter().copied().sum::<T>() / T::from_usize_lossy(g.as_slice().len())
}

/// 2x2 box average, stride 1, replicating the last row and column.
pub fn haar_lowpass<T: Real>(s: &Grid<T>) -> Grid<T> {
    let quarter = T::lit(0.25);
    Grid::from_fn(s.width(), s.height(), |x, y| {
        let (x, y) = (x as isize, y as isize);
        (s.get_clamped(x, y) + s.get_clamped(x + 1, y) + s.get_clamped(x, y + 1) + s.get_clamped(x + 1, y + 1))
            * quarter
    })
}

/// `sum(S' * p) / sum(p)` where `S'` is the low-passed SSIM map.
pub fn weighted_pool<T: Real>(ssim: &Grid<T>, p: &FoveationMap<T>) -> Result<T> {
    if ssim.width() != p.width() || ssim.height() != p.height() {
        return Err(contract("foveation map does not match the SSIM map"));
    }
    let low = haar_lowpass(ssim);
    let mut num = T::zero();
    let mut den = T::zero();
    for (&s, &w) in low.as_slice().iter().zip(p.values().as_slice()) {
        num = num + s * w;
        den = den + w;
    }
    if den <= T::zero() {
        return Err(contract("foveation map has zero total weight"));
    }
    Ok(num / den)
}

pub fn foveation_weighted_ssim<T: Real>(
    reference: &FramePlane,
    test: &FramePlane,
    p: &FoveationMap<T>,
) -> Result<T> {
    weighted_pool(&ssim_map(reference, test)?, p)
}
