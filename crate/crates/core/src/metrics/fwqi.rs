//! Wavelet-domain foveated quality score.
//!
//! Both frames are decomposed with a 4-level orthonormal 2-D Haar transform.
//! A coefficient at scale `s` is weighted by the error sensitivity at
//! frequency `nyquist / 2^s` and at the eccentricity of the center of its
//! spatial support. The final approximation band uses scale 4. The score is
//! `1 - |W(ref - test)| / |W ref|`, clamped to [0, 1].

use crate::error::{contract, Result};
use crate::foveation::{display_nyquist, eccentricity, error_sensitivity, CsfParams, DisplayGeometry, Gaze};
use crate::grid::Grid;
use crate::num::Real;
use crate::video::FramePlane;

pub const LEVELS: u32 = 4;

/// One subband of the decomposition.
#[derive(Debug, Clone)]
pub struct Subband<T> {
    /// 1 is the finest scale.
    pub scale: u32,
    pub coeffs: Grid<T>,
}

/// Orthonormal Haar analysis: three detail bands per level, then the final
/// approximation. Dimensions must be divisible by `2^levels`.
pub fn haar_decompose<T: Real>(img: &Grid<T>, levels: u32) -> Result<Vec<Subband<T>>> {
    let m = 1usize << levels;
    if !img.width().is_multiple_of(m) || !img.height().is_multiple_of(m) || img.width() == 0 || img.height() == 0 {
        return Err(contract(format!(
            "{}x{} is not divisible by {m}",
            img.width(),
            img.height()
        )));
    }
    let half = T::lit(0.5);
    let mut bands = Vec::with_capacity(3 * levels as usize + 1);
    let mut ll = img.clone();
    for scale in 1..=levels {
        let (w, h) = (ll.width() / 2, ll.height() / 2);
        let mut a = Grid::filled(w, h, T::zero());
        let mut dh = a.clone();
        let mut dv = a.clone();
        let mut dd = a.clone();
        for y in 0..h {
            for x in 0..w {
                let p00 = ll.get(2 * x, 2 * y);
                let p10 = ll.get(2 * x + 1, 2 * y);
                let p01 = ll.get(2 * x, 2 * y + 1);
                let p11 = ll.get(2 * x + 1, 2 * y + 1);
                a.set(x, y, (p00 + p10 + p01 + p11) * half);
                dh.set(x, y, (p00 - p10 + p01 - p11) * half);
                dv.set(x, y, (p00 + p10 - p01 - p11) * half);
                dd.set(x, y, (p00 - p10 - p01 + p11) * half);
            }
        }
        for coeffs in [dh, dv, dd] {
            bands.push(Subband { scale, coeffs });
        }
        ll = a;
    }
    bands.push(Subband {
        scale: levels,
        coeffs: ll,
    });
    Ok(bands)
}

fn cropped<T: Real>(p: &FramePlane, w: usize, h: usize) -> Grid<T> {
    Grid::from_fn(w, h, |x, y| T::from_u8(p.get(x, y)).unwrap())
}

/// Sensitivity weight for every coefficient of every band.
fn band_weights<T: Real>(
    bands: &[Subband<T>],
    gaze: Gaze,
    geom: &DisplayGeometry<T>,
    csf: &CsfParams<T>,
) -> Vec<Grid<T>> {
    let nyq = display_nyquist(geom);
    let g = gaze.as_real::<T>();
    bands
        .iter()
        .map(|b| {
            let span = (1usize << b.scale) as f64;
            let f = nyq / T::lit(span);
            let offset = T::lit((span - 1.0) / 2.0);
            let span = T::lit(span);
            Grid::from_fn(b.coeffs.width(), b.coeffs.height(), |u, v| {
                let cx = T::from_usize_lossy(u) * span + offset;
                let cy = T::from_usize_lossy(v) * span + offset;
                error_sensitivity(f, eccentricity((cx, cy), g, geom), csf)
            })
        })
        .collect()
}

pub fn fwqi_approx<T: Real>(
    reference: &FramePlane,
    test: &FramePlane,
    gaze: Gaze,
    geom: &DisplayGeometry<T>,
    csf: &CsfParams<T>,
) -> Result<T> {
    if !reference.same_dims(test) {
        return Err(contract("FWQI inputs differ in size"));
    }
    let m = 1usize << LEVELS;
    let w = reference.width() / m * m;
    let h = reference.height() / m * m;
    if w == 0 || h == 0 {
        return Err(contract(format!(
            "{}x{} frame is smaller than {m}x{m}",
            reference.width(),
            reference.height()
        )));
    }
    let r = cropped::<T>(reference, w, h);
    let t = cropped::<T>(test, w, h);
    let diff = Grid::from_fn(w, h, |x, y| r.get(x, y) - t.get(x, y));
    let rb = haar_decompose(&r, LEVELS)?;
    let db = haar_decompose(&diff, LEVELS)?;
    let weights = band_weights(&rb, gaze, geom, csf);

    let mut err = T::zero();
    let mut energy = T::zero();
    for ((rb, db), wg) in rb.iter().zip(&db).zip(&weights) {
        for ((&rc, &dc), &wc) in rb.coeffs.as_slice().iter().zip(db.coeffs.as_slice()).zip(wg.as_slice()) {
            err = err + (wc * dc) * (wc * dc);
            energy = energy + (wc * rc) * (wc * rc);
        }
    }
    if energy <= T::zero() {
        return Err(contract("reference has no weighted energy"));
    }
    let score = T::one() - err.sqrt() / energy.sqrt();
    Ok(score.max(T::zero()).min(T::one()))
}
