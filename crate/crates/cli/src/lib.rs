//! Command implementations behind the `foveacodec` binary.
//!
//! Each command is a plain function so the integration tests can drive it
//! without spawning processes.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use foveacodec::codec::{
    decode_sequence, encode_sequence, EncoderConfig, FrameGuide, QuantSchedule, SequenceBitstream, MAGIC,
};
use foveacodec::foveation::{foveation_map, gaussian_map, quantize_map, CsfParams, DisplayGeometry, Gaze, LevelMap};
use foveacodec::metrics::{evaluate_frame, write_report_csv, QualityReport};
use foveacodec::video::{read_y4m, write_y4m, VideoSequence};
use foveacodec::{CsfParamsF64, DisplayGeometryF64, FoveationMapF64};
use rayon::prelude::*;

pub const DEFAULT_SWEEP: [u16; 6] = [10, 8, 6, 4, 3, 2];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}:{line}: {msg}")]
    GazeParse { path: PathBuf, line: u64, msg: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Input { path: PathBuf, source: foveacodec::Error },
    #[error(transparent)]
    Core(#[from] foveacodec::Error),
}

impl CliError {
    /// 2 configuration, 3 malformed stream, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        use foveacodec::Error as E;
        let core = match self {
            CliError::Config(_) | CliError::GazeParse { .. } => return 2,
            CliError::Io { .. } => return 4,
            CliError::Input { source, .. } | CliError::Core(source) => source,
        };
        match core {
            E::Io(_) => 4,
            E::Bitstream { .. } | E::UnsupportedVersion(_) | E::Parse(_) | E::UnsupportedFormat(_) | E::TruncatedStream(_) => 3,
            E::ContractViolation(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Width of the gaussian map, or the eccentricity model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fmsc {
    /// `H/k`
    Divisor(u16),
    Pixels(f64),
    /// No gaussian: use the contrast-sensitivity map.
    Csf,
}

impl Fmsc {
    pub fn pixels(self, height: usize) -> Option<f64> {
        match self {
            Fmsc::Divisor(k) => Some(height as f64 / k as f64),
            Fmsc::Pixels(p) => Some(p),
            Fmsc::Csf => None,
        }
    }

    /// Container code: `k` for `H/k` when it fits a byte, else 0.
    pub fn code(self) -> u8 {
        match self {
            Fmsc::Divisor(k) => u8::try_from(k).unwrap_or(0),
            _ => 0,
        }
    }
}

impl FromStr for Fmsc {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("csf") {
            return Ok(Fmsc::Csf);
        }
        if let Some(k) = s.strip_prefix("H/").or_else(|| s.strip_prefix("h/")) {
            return match k.parse::<u16>() {
                Ok(k) if k > 0 => Ok(Fmsc::Divisor(k)),
                _ => Err(config(format!("bad FMSC divisor {s:?}"))),
            };
        }
        match s.parse::<f64>() {
            Ok(p) if p.is_finite() && p > 0.0 => Ok(Fmsc::Pixels(p)),
            _ => Err(config(format!("FMSC must be H/k or a positive pixel width, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GazeSource {
    Center,
    Track(PathBuf),
}

impl FromStr for GazeSource {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(if s == "center" {
            GazeSource::Center
        } else {
            GazeSource::Track(PathBuf::from(s))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodeConfig {
    pub fmsc: Fmsc,
    pub gaze: GazeSource,
    /// Allow a gaze track that stops before the clip does.
    pub hold_gaze: bool,
    pub q_base: u16,
    pub levels: u8,
    pub screen_width: f64,
    pub viewing_distance: f64,
}

impl Default for EncodeConfig {
    fn default() -> Self {
        Self {
            fmsc: Fmsc::Csf,
            gaze: GazeSource::Center,
            hold_gaze: false,
            q_base: QuantSchedule::DEFAULT_Q_BASE,
            levels: LevelMap::DEFAULT_LEVELS,
            screen_width: DisplayGeometryF64::DEFAULT_SCREEN_WIDTH_M,
            viewing_distance: DisplayGeometryF64::DEFAULT_VIEWING_DISTANCE_M,
        }
    }
}

impl EncodeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.screen_width > 0.0 && self.viewing_distance > 0.0) {
            return Err(config("screen width and viewing distance must be positive"));
        }
        QuantSchedule::new(self.levels, self.q_base).map_err(|e| config(e.to_string()))?;
        Ok(())
    }

    fn geometry(&self, w: usize, h: usize) -> Result<DisplayGeometryF64> {
        DisplayGeometry::new(self.screen_width, self.viewing_distance, w, h).map_err(|e| config(e.to_string()))
    }
}

/// Per-frame gaze from a track file, plus how many frames the file itself
/// reached before hold-last took over.
#[derive(Debug, Clone, PartialEq)]
pub struct GazeTrack {
    pub gazes: Vec<Gaze>,
    pub covered: usize,
}

/// Parses `frame_idx,x,y` rows (optional header, `#` comments). Frames before
/// the first row look at the center; gaps and the tail hold the last gaze;
/// coordinates are clamped into the frame; rows past the clip are ignored.
pub fn read_gaze_track<R: Read>(src: R, path: &Path, frames: usize, w: usize, h: usize) -> Result<GazeTrack> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(src);
    let mut gazes = vec![Gaze::center(w, h); frames];
    let mut last: Option<usize> = None;
    let mut covered = 0;
    for (i, rec) in rdr.records().enumerate() {
        let perr = |line: u64, msg: String| CliError::GazeParse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            perr(line, e.to_string())
        })?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if i == 0 && rec.get(0) == Some("frame_idx") {
            continue;
        }
        if rec.len() != 3 {
            return Err(perr(line, format!("expected 3 fields, found {}", rec.len())));
        }
        let idx: usize = rec[0].parse().map_err(|_| perr(line, format!("bad frame index {:?}", &rec[0])))?;
        let x: i64 = rec[1].parse().map_err(|_| perr(line, format!("bad x {:?}", &rec[1])))?;
        let y: i64 = rec[2].parse().map_err(|_| perr(line, format!("bad y {:?}", &rec[2])))?;
        if last.is_some_and(|l| idx <= l) {
            return Err(perr(line, format!("frame index {idx} is not increasing")));
        }
        last = Some(idx);
        if idx >= frames {
            continue;
        }
        let g = Gaze::clamped(x, y, w, h);
        for slot in &mut gazes[idx..] {
            *slot = g;
        }
        covered = idx + 1;
    }
    Ok(GazeTrack { gazes, covered })
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_bytes(path: &Path, data: &[u8]) -> Result<()> {
    fs::write(path, data).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn input_err(path: &Path) -> impl FnOnce(foveacodec::Error) -> CliError + '_ {
    move |source| CliError::Input {
        path: path.to_path_buf(),
        source,
    }
}

pub fn load_y4m(path: &Path) -> Result<VideoSequence> {
    read_y4m(&read_bytes(path)?[..]).map_err(input_err(path))
}

fn resolve_gazes(src: &GazeSource, hold: bool, frames: usize, w: usize, h: usize) -> Result<Vec<Gaze>> {
    match src {
        GazeSource::Center => Ok(vec![Gaze::center(w, h); frames]),
        GazeSource::Track(path) => {
            let data = read_bytes(path)?;
            let track = read_gaze_track(&data[..], path, frames, w, h)?;
            if track.covered < frames && !hold {
                return Err(config(format!(
                    "gaze track {} covers {} of {frames} frames (pass --hold-gaze to hold the last gaze)",
                    path.display(),
                    track.covered
                )));
            }
            Ok(track.gazes)
        }
    }
}

fn csf_map(geom: &DisplayGeometryF64, gaze: Gaze) -> Result<FoveationMapF64> {
    Ok(foveation_map(geom, gaze, &CsfParamsF64::default())?)
}

/// One guide per frame; maps are shared between frames with equal gaze.
fn build_guides(seq: &VideoSequence, gazes: &[Gaze], fmsc: Fmsc, cfg: &EncodeConfig) -> Result<Vec<FrameGuide>> {
    let (w, h) = (seq.width(), seq.height());
    let geom = cfg.geometry(w, h)?;
    let mut cache: HashMap<Gaze, FrameGuide> = HashMap::new();
    gazes
        .iter()
        .map(|&g| {
            if let Some(guide) = cache.get(&g) {
                return Ok(guide.clone());
            }
            let map = match fmsc.pixels(h) {
                Some(px) => gaussian_map(g, px, w, h)?,
                None => csf_map(&geom, g)?,
            };
            let guide = FrameGuide {
                gaze: g,
                fmsc_code: fmsc.code(),
                levels: quantize_map(&map, cfg.levels)?,
            };
            cache.insert(g, guide.clone());
            Ok(guide)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodeSummary {
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub bpp: f64,
    pub frame_bits: Vec<u64>,
    pub bytes_written: usize,
}

fn encode_in_memory(
    seq: &VideoSequence,
    gazes: &[Gaze],
    fmsc: Fmsc,
    cfg: &EncodeConfig,
) -> Result<foveacodec::codec::EncodedSequence> {
    let guides = build_guides(seq, gazes, fmsc, cfg)?;
    let sched = QuantSchedule::new(cfg.levels, cfg.q_base).map_err(|e| config(e.to_string()))?;
    Ok(encode_sequence(
        seq,
        &guides,
        &sched,
        &EncoderConfig::default(),
        cfg.screen_width,
        cfg.viewing_distance,
    )?)
}

/// Encodes a Y4M clip; nothing is written unless encoding succeeds.
pub fn cmd_encode(input: &Path, output: &Path, cfg: &EncodeConfig) -> Result<EncodeSummary> {
    cfg.validate()?;
    let seq = load_y4m(input)?;
    let gazes = resolve_gazes(&cfg.gaze, cfg.hold_gaze, seq.len(), seq.width(), seq.height())?;
    let enc = encode_in_memory(&seq, &gazes, cfg.fmsc, cfg)?;
    let bytes = enc.bitstream.to_bytes();
    write_bytes(output, &bytes)?;
    Ok(EncodeSummary {
        frames: seq.len(),
        width: seq.width(),
        height: seq.height(),
        bpp: enc.bitstream.bpp(),
        frame_bits: enc.frames.iter().map(|f| f.bitstream.bit_len()).collect(),
        bytes_written: bytes.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeSummary {
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub bytes_written: u64,
}

pub fn load_fmvc(path: &Path) -> Result<SequenceBitstream> {
    SequenceBitstream::from_bytes(&read_bytes(path)?).map_err(input_err(path))
}

pub fn cmd_decode(input: &Path, output: &Path) -> Result<DecodeSummary> {
    let bits = load_fmvc(input)?;
    let seq = decode_sequence(&bits).map_err(input_err(input))?;
    let mut buf = Vec::new();
    let n = write_y4m(&seq, &mut buf)?;
    write_bytes(output, &buf)?;
    Ok(DecodeSummary {
        frames: seq.len(),
        width: seq.width(),
        height: seq.height(),
        bytes_written: n,
    })
}

/// One rate-distortion point, scores averaged over frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub fmsc: f64,
    pub bpp: f64,
    pub mean_ssim: f64,
    pub fw_ssim: f64,
    pub fwqi_approx: f64,
}

fn score_clip(
    src: &VideoSequence,
    dec: &VideoSequence,
    gazes: &[Gaze],
    frame_bpp: &[f64],
    geom: &DisplayGeometryF64,
) -> Result<Vec<QualityReport<f64>>> {
    let csf = CsfParams::default();
    let mut maps: HashMap<Gaze, FoveationMapF64> = HashMap::new();
    src.frames()
        .iter()
        .zip(dec.frames())
        .zip(gazes)
        .zip(frame_bpp)
        .map(|(((s, d), &g), &bpp)| {
            if let Entry::Vacant(slot) = maps.entry(g) {
                slot.insert(csf_map(geom, g)?);
            }
            Ok(evaluate_frame(&s.y, &d.y, &maps[&g], geom, &csf, bpp)?)
        })
        .collect()
}

fn average(rows: &[QualityReport<f64>]) -> (f64, f64, f64) {
    let n = rows.len() as f64;
    (
        rows.iter().map(|r| r.mean_ssim).sum::<f64>() / n,
        rows.iter().map(|r| r.fw_ssim).sum::<f64>() / n,
        rows.iter().map(|r| r.fwqi_approx).sum::<f64>() / n,
    )
}

/// Encodes the clip once per FMSC (concurrently) and scores the decoded
/// output. `fw_ssim` is always pooled with the contrast-sensitivity map so
/// the points are comparable. Rows come back in ascending FMSC.
pub fn rd_sweep(seq: &VideoSequence, fmscs: &[Fmsc], cfg: &EncodeConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    if fmscs.is_empty() {
        return Err(config("empty FMSC set"));
    }
    if fmscs.contains(&Fmsc::Csf) {
        return Err(config("the sweep takes gaussian FMSC values only"));
    }
    let gazes = resolve_gazes(&cfg.gaze, cfg.hold_gaze, seq.len(), seq.width(), seq.height())?;
    let geom = cfg.geometry(seq.width(), seq.height())?;
    let pixels = (seq.width() * seq.height()) as f64;
    let mut rows = fmscs
        .par_iter()
        .map(|&f| {
            let enc = encode_in_memory(seq, &gazes, f, cfg)?;
            let dec = decode_sequence(&enc.bitstream)?;
            let bpp: Vec<f64> = enc.frames.iter().map(|fr| fr.bitstream.bit_len() as f64 / pixels).collect();
            let (mean_ssim, fw_ssim, fwqi_approx) = average(&score_clip(seq, &dec, &gazes, &bpp, &geom)?);
            Ok(SweepRow {
                fmsc: f.pixels(seq.height()).expect("gaussian FMSC"),
                bpp: enc.bitstream.bpp(),
                mean_ssim,
                fw_ssim,
                fwqi_approx,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.fmsc.total_cmp(&b.fmsc));
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let io = |e: csv::Error| CliError::Io {
        path: PathBuf::from("<csv>"),
        source: io::Error::other(e),
    };
    w.write_record(["fmsc", "bpp", "mean_ssim", "fw_ssim", "fwqi_approx"]).map_err(io)?;
    for r in rows {
        w.write_record([
            format!("{:.3}", r.fmsc),
            format!("{:.6}", r.bpp),
            format!("{:.6}", r.mean_ssim),
            format!("{:.6}", r.fw_ssim),
            format!("{:.6}", r.fwqi_approx),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: PathBuf::from("<csv>"),
        source,
    })?;
    Ok(())
}

pub fn cmd_rd_sweep(input: &Path, out: &Path, fmscs: &[Fmsc], cfg: &EncodeConfig) -> Result<Vec<SweepRow>> {
    let seq = load_y4m(input)?;
    let rows = rd_sweep(&seq, fmscs, cfg)?;
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf)?;
    write_bytes(out, &buf)?;
    Ok(rows)
}

/// Scores `test` (Y4M or FMVC) against `reference`. With an FMVC input and no
/// explicit gaze the gaze recorded per frame is used, and bpp is the frame's
/// payload; raw inputs report bpp 0.
pub fn cmd_metrics<W: Write>(
    reference: &Path,
    test: &Path,
    gaze: Option<&GazeSource>,
    cfg: &EncodeConfig,
    sink: W,
) -> Result<Vec<QualityReport<f64>>> {
    cfg.validate()?;
    let src = load_y4m(reference)?;
    let data = read_bytes(test)?;
    let (dec, stored, frame_bpp) = if data.starts_with(&MAGIC) {
        let bits = SequenceBitstream::from_bytes(&data).map_err(input_err(test))?;
        let dec = decode_sequence(&bits).map_err(input_err(test))?;
        let pixels = (dec.width() * dec.height()) as f64;
        let stored: Vec<Gaze> = bits.frames.iter().map(|f| f.gaze).collect();
        let bpp = bits.frames.iter().map(|f| f.bitstream.bit_len() as f64 / pixels).collect();
        (dec, Some(stored), bpp)
    } else {
        let dec = read_y4m(&data[..]).map_err(input_err(test))?;
        let n = dec.len();
        (dec, None, vec![0.0; n])
    };
    if dec.len() != src.len() || dec.width() != src.width() || dec.height() != src.height() {
        return Err(config(format!(
            "test is {}x{}x{}, reference {}x{}x{}",
            dec.width(),
            dec.height(),
            dec.len(),
            src.width(),
            src.height(),
            src.len()
        )));
    }
    let gazes = match (gaze, stored) {
        (Some(g), _) => resolve_gazes(g, cfg.hold_gaze, src.len(), src.width(), src.height())?,
        (None, Some(s)) => s,
        (None, None) => vec![Gaze::center(src.width(), src.height()); src.len()],
    };
    let geom = cfg.geometry(src.width(), src.height())?;
    let rows = score_clip(&src, &dec, &gazes, &frame_bpp, &geom)?;
    write_report_csv(&rows, "fw_ssim weights: contrast-sensitivity foveation map", sink).map_err(|e| match e {
        foveacodec::Error::Io(source) => CliError::Io {
            path: PathBuf::from("<stdout>"),
            source,
        },
        other => other.into(),
    })?;
    Ok(rows)
}

/// Writes the foveation map (or its quantized levels) for one gaze as PGM.
pub fn cmd_map(
    width: usize,
    height: usize,
    gaze: Gaze,
    fmsc: Fmsc,
    quantized: bool,
    cfg: &EncodeConfig,
    output: &Path,
) -> Result<()> {
    cfg.validate()?;
    if width == 0 || height == 0 || gaze.x >= width || gaze.y >= height {
        return Err(config("map size must be positive and contain the gaze"));
    }
    let map = match fmsc.pixels(height) {
        Some(px) => gaussian_map(gaze, px, width, height)?,
        None => csf_map(&cfg.geometry(width, height)?, gaze)?,
    };
    let mut buf = Vec::new();
    if quantized {
        quantize_map(&map, cfg.levels)?.write_pgm(&mut buf)?;
    } else {
        map.write_pgm(&mut buf)?;
    }
    write_bytes(output, &buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        use foveacodec::Error as E;
        let input = |e| CliError::Input {
            path: "x".into(),
            source: e,
        };
        assert_eq!(config("x").exit_code(), 2);
        assert_eq!(input(E::UnsupportedVersion(9)).exit_code(), 3);
        assert_eq!(input(E::Parse("y4m".into())).exit_code(), 3);
        assert_eq!(input(E::Io(io::Error::other("disk"))).exit_code(), 4);
        assert_eq!(CliError::Core(E::ContractViolation("c".into())).exit_code(), 2);
    }

    #[test]
    fn gaze_source_parses() {
        assert_eq!("center".parse::<GazeSource>().unwrap(), GazeSource::Center);
        assert_eq!(
            "g.csv".parse::<GazeSource>().unwrap(),
            GazeSource::Track(PathBuf::from("g.csv"))
        );
    }

    #[test]
    fn config_validation() {
        assert!(EncodeConfig::default().validate().is_ok());
        let bad = EncodeConfig {
            viewing_distance: 0.0,
            ..EncodeConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = EncodeConfig {
            levels: 1,
            ..EncodeConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
