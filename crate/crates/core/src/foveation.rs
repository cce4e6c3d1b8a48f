//! Eccentricity-dependent contrast sensitivity and foveation maps.
//!
//! The contrast threshold grows exponentially with spatial frequency and with
//! retinal eccentricity:
//!
//! ```text
//! CT(f, e) = CT0 * exp(alpha * f * (e + e2) / e2)
//! ```
//!
//! Normalizing the sensitivity `1 / CT` by its foveal value gives the error
//! sensitivity `exp(-alpha * f * e / e2)`, which drops to zero past the cutoff
//! frequency where the threshold reaches full contrast. Evaluating it at the
//! display Nyquist frequency for every pixel yields the foveation map that
//! drives bit allocation.

use std::io::Write;

use crate::error::{contract, Result};
use crate::grid::Grid;
use crate::num::Real;

/// Viewing setup used to convert pixel distances to visual angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplayGeometry<T> {
    /// Physical width of the visible screen area, meters.
    pub screen_width: T,
    /// Eye-to-screen distance, meters.
    pub viewing_distance: T,
    pub width_px: usize,
    pub height_px: usize,
}

impl<T: Real> DisplayGeometry<T> {
    pub const DEFAULT_SCREEN_WIDTH_M: f64 = 0.02;
    pub const DEFAULT_VIEWING_DISTANCE_M: f64 = 0.012;

    pub fn new(screen_width: T, viewing_distance: T, width_px: usize, height_px: usize) -> Result<Self> {
        if !(screen_width > T::zero() && viewing_distance > T::zero()) || width_px == 0 || height_px == 0 {
            return Err(contract(format!(
                "display geometry must be positive: {screen_width} m, {viewing_distance} m, {width_px}x{height_px}"
            )));
        }
        Ok(Self {
            screen_width,
            viewing_distance,
            width_px,
            height_px,
        })
    }

    /// Head-mounted display defaults (2 cm screen width at 1.2 cm).
    pub fn with_defaults(width_px: usize, height_px: usize) -> Result<Self> {
        Self::new(
            T::lit(Self::DEFAULT_SCREEN_WIDTH_M),
            T::lit(Self::DEFAULT_VIEWING_DISTANCE_M),
            width_px,
            height_px,
        )
    }

    /// Meters per pixel.
    pub fn pixel_pitch(&self) -> T {
        self.screen_width / T::from_usize_lossy(self.width_px)
    }

    /// Pixels per degree of visual angle at the screen center.
    pub fn pixels_per_degree(&self) -> T {
        T::PI() / T::lit(180.0) * self.viewing_distance / self.pixel_pitch()
    }

    /// Largest pixel radius whose eccentricity does not exceed `degrees`.
    pub fn radius_for_eccentricity(&self, degrees: T) -> T {
        degrees.to_radians().tan() * self.viewing_distance / self.pixel_pitch()
    }
}

/// Parameters of the contrast threshold model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsfParams<T> {
    /// Spatial frequency decay constant.
    pub alpha: T,
    /// Half-resolution eccentricity, degrees.
    pub e2: T,
    /// Minimum contrast threshold.
    pub ct0: T,
}

impl<T: Real> CsfParams<T> {
    pub fn new(alpha: T, e2: T, ct0: T) -> Result<Self> {
        if !(alpha > T::zero() && e2 > T::zero() && ct0 > T::zero() && ct0 < T::one()) {
            return Err(contract(format!("invalid CSF parameters ({alpha}, {e2}, {ct0})")));
        }
        Ok(Self { alpha, e2, ct0 })
    }
}

impl<T: Real> Default for CsfParams<T> {
    fn default() -> Self {
        Self {
            alpha: T::lit(0.106),
            e2: T::lit(2.3),
            ct0: T::one() / T::lit(64.0),
        }
    }
}

fn check_nonneg<T: Real>(f: T, e: T) -> Result<()> {
    if f >= T::zero() && e >= T::zero() {
        Ok(())
    } else {
        Err(contract(format!("frequency {f} and eccentricity {e} must be non-negative")))
    }
}

/// Minimum visible contrast at frequency `f` (cycles/degree) and
/// eccentricity `e` (degrees). Not clamped at full contrast.
pub fn contrast_threshold<T: Real>(f: T, e: T, p: &CsfParams<T>) -> Result<T> {
    check_nonneg(f, e)?;
    Ok(p.ct0 * (p.alpha * f * (e + p.e2) / p.e2).exp())
}

pub fn contrast_sensitivity<T: Real>(f: T, e: T, p: &CsfParams<T>) -> Result<T> {
    Ok(contrast_threshold(f, e, p)?.recip())
}

/// Frequency at which the threshold reaches full contrast (`CT = 1`).
pub fn cutoff_frequency<T: Real>(e: T, p: &CsfParams<T>) -> T {
    p.e2 * p.ct0.recip().ln() / (p.alpha * (e + p.e2))
}

/// Sensitivity at `(f, e)` relative to the fovea, in [0, 1].
pub fn error_sensitivity<T: Real>(f: T, e: T, p: &CsfParams<T>) -> T {
    if f > cutoff_frequency(e, p) {
        T::zero()
    } else {
        (-p.alpha * f * e / p.e2).exp()
    }
}

/// Visual angle in degrees between `pixel` and `gaze`.
pub fn eccentricity<T: Real>(pixel: (T, T), gaze: (T, T), geom: &DisplayGeometry<T>) -> T {
    let r_px = (pixel.0 - gaze.0).hypot(pixel.1 - gaze.1);
    let r = r_px * geom.pixel_pitch();
    r.atan2(geom.viewing_distance).to_degrees()
}

/// Highest frequency the display can show without aliasing, cycles/degree.
pub fn display_nyquist<T: Real>(geom: &DisplayGeometry<T>) -> T {
    geom.pixels_per_degree() / T::lit(2.0)
}

/// Point of fixation in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Gaze {
    pub x: usize,
    pub y: usize,
}

impl Gaze {
    pub fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    pub fn center(width: usize, height: usize) -> Self {
        Self {
            x: width / 2,
            y: height / 2,
        }
    }

    pub fn clamped(x: i64, y: i64, width: usize, height: usize) -> Self {
        Self {
            x: x.clamp(0, width as i64 - 1) as usize,
            y: y.clamp(0, height as i64 - 1) as usize,
        }
    }

    pub fn as_real<T: Real>(self) -> (T, T) {
        (T::from_usize_lossy(self.x), T::from_usize_lossy(self.y))
    }
}

/// Per-pixel weight in [0, 1] with its fixation point.
#[derive(Debug, Clone, PartialEq)]
pub struct FoveationMap<T> {
    values: Grid<T>,
    gaze: Gaze,
}

impl<T: Real> FoveationMap<T> {
    pub fn new(values: Grid<T>, gaze: Gaze) -> Result<Self> {
        if values.as_slice().iter().any(|v| !(*v >= T::zero() && *v <= T::one())) {
            return Err(contract("foveation map values must lie in [0, 1]"));
        }
        Ok(Self { values, gaze })
    }

    /// Map with the same weight everywhere.
    pub fn uniform(width: usize, height: usize, value: T) -> Result<Self> {
        Self::new(Grid::filled(width, height, value), Gaze::center(width, height))
    }

    pub fn values(&self) -> &Grid<T> {
        &self.values
    }

    pub fn gaze(&self) -> Gaze {
        self.gaze
    }

    pub fn width(&self) -> usize {
        self.values.width()
    }

    pub fn height(&self) -> usize {
        self.values.height()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.values.get(x, y)
    }

    /// Binary PGM with values scaled by 255 and rounded.
    pub fn write_pgm<W: Write>(&self, sink: W) -> Result<()> {
        let bytes = self
            .values
            .as_slice()
            .iter()
            .map(|v| (*v * T::lit(255.0)).round().to_u8().unwrap_or(255))
            .collect::<Vec<_>>();
        write_pgm(sink, self.width(), self.height(), &bytes)
    }
}

fn check_gaze(gaze: Gaze, width: usize, height: usize) -> Result<()> {
    if gaze.x < width && gaze.y < height {
        Ok(())
    } else {
        Err(contract(format!(
            "gaze ({}, {}) outside {width}x{height} frame",
            gaze.x, gaze.y
        )))
    }
}

/// Error sensitivity at the display Nyquist frequency for every pixel.
pub fn foveation_map<T: Real>(geom: &DisplayGeometry<T>, gaze: Gaze, p: &CsfParams<T>) -> Result<FoveationMap<T>> {
    check_gaze(gaze, geom.width_px, geom.height_px)?;
    let f = display_nyquist(geom);
    let g = gaze.as_real::<T>();
    let values = Grid::from_fn(geom.width_px, geom.height_px, |x, y| {
        let e = eccentricity((T::from_usize_lossy(x), T::from_usize_lossy(y)), g, geom);
        error_sensitivity(f, e, p)
    });
    FoveationMap::new(values, gaze)
}

/// Isotropic gaussian map with standard deviation `fmsc` pixels.
pub fn gaussian_map<T: Real>(gaze: Gaze, fmsc: T, width: usize, height: usize) -> Result<FoveationMap<T>> {
    if fmsc.is_nan() || fmsc <= T::zero() {
        return Err(contract(format!("FMSC must be positive, got {fmsc}")));
    }
    check_gaze(gaze, width, height)?;
    let denom = T::lit(2.0) * fmsc * fmsc;
    let (gx, gy) = gaze.as_real::<T>();
    let values = Grid::from_fn(width, height, |x, y| {
        let dx = T::from_usize_lossy(x) - gx;
        let dy = T::from_usize_lossy(y) - gy;
        (-(dx * dx + dy * dy) / denom).exp()
    });
    FoveationMap::new(values, gaze)
}

/// Foveation map quantized to `n` integer levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelMap {
    levels: Grid<u8>,
    n: u8,
}

impl LevelMap {
    pub const DEFAULT_LEVELS: u8 = 16;

    pub fn new(levels: Grid<u8>, n: u8) -> Result<Self> {
        if n < 2 {
            return Err(contract(format!("level count {n} < 2")));
        }
        if levels.as_slice().iter().any(|&l| l >= n) {
            return Err(contract(format!("level outside [0, {}]", n - 1)));
        }
        Ok(Self { levels, n })
    }

    pub fn uniform(width: usize, height: usize, level: u8, n: u8) -> Result<Self> {
        Self::new(Grid::filled(width, height, level), n)
    }

    pub fn levels(&self) -> &Grid<u8> {
        &self.levels
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    pub fn width(&self) -> usize {
        self.levels.width()
    }

    pub fn height(&self) -> usize {
        self.levels.height()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.levels.get(x, y)
    }

    pub fn write_pgm<W: Write>(&self, sink: W) -> Result<()> {
        let top = (self.n - 1) as u32;
        let bytes = self
            .levels
            .as_slice()
            .iter()
            .map(|&l| ((l as u32 * 255 + top / 2) / top) as u8)
            .collect::<Vec<_>>();
        write_pgm(sink, self.width(), self.height(), &bytes)
    }
}

/// `level = min(floor(value * n), n - 1)`; level 0 is still coded downstream.
pub fn quantize_map<T: Real>(map: &FoveationMap<T>, n: u8) -> Result<LevelMap> {
    if n < 2 {
        return Err(contract(format!("level count {n} < 2")));
    }
    let nf = T::from_u8(n).expect("u8 fits");
    let top = n - 1;
    let levels = map.values.map(|v| {
        let l = (v * nf).floor();
        if l <= T::zero() {
            0
        } else {
            l.to_u8().map_or(top, |l| l.min(top))
        }
    });
    LevelMap::new(levels, n)
}

fn write_pgm<W: Write>(mut sink: W, width: usize, height: usize, bytes: &[u8]) -> Result<()> {
    write!(sink, "P5\n{width} {height}\n255\n")?;
    sink.write_all(bytes)?;
    sink.flush()?;
    Ok(())
}
