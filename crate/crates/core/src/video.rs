//! Planar 4:2:0 frames and YUV4MPEG2 reading/writing.

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{contract, Error, Result};

/// One 8-bit image plane, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FramePlane {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl FramePlane {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(contract(format!("plane dimensions {width}x{height}")));
        }
        if samples.len() != width * height {
            return Err(contract(format!(
                "plane has {} samples, expected {}",
                samples.len(),
                width * height
            )));
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Self::new(width, height, samples)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.samples[y * self.width + x] = v;
    }

    /// Replicate-padded read.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.samples[cy * self.width + cx]
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn same_dims(&self, other: &FramePlane) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// CRC-32 of the sample data, used to detect decoder drift.
    pub fn checksum(&self) -> u32 {
        crc32fast::hash(&self.samples)
    }
}

/// Chroma plane dimensions for 4:2:0 sampling.
pub fn chroma_dims(width: usize, height: usize) -> (usize, usize) {
    (width.div_ceil(2), height.div_ceil(2))
}

/// A 4:2:0 frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub y: FramePlane,
    pub cb: FramePlane,
    pub cr: FramePlane,
}

impl Frame {
    pub fn new(y: FramePlane, cb: FramePlane, cr: FramePlane) -> Result<Self> {
        let (cw, ch) = chroma_dims(y.width(), y.height());
        for (name, p) in [("cb", &cb), ("cr", &cr)] {
            if p.width() != cw || p.height() != ch {
                return Err(contract(format!(
                    "{name} plane is {}x{}, expected {cw}x{ch}",
                    p.width(),
                    p.height()
                )));
            }
        }
        Ok(Self { y, cb, cr })
    }

    /// Frame with every sample of every plane set to `value`.
    pub fn uniform(width: usize, height: usize, value: u8) -> Result<Self> {
        let (cw, ch) = chroma_dims(width, height);
        Self::new(
            FramePlane::filled(width, height, value)?,
            FramePlane::filled(cw, ch, value)?,
            FramePlane::filled(cw, ch, value)?,
        )
    }

    /// Luma plane paired with neutral (128) chroma.
    pub fn from_luma(y: FramePlane) -> Result<Self> {
        let (cw, ch) = chroma_dims(y.width(), y.height());
        Self::new(
            y,
            FramePlane::filled(cw, ch, 128)?,
            FramePlane::filled(cw, ch, 128)?,
        )
    }

    pub fn width(&self) -> usize {
        self.y.width()
    }

    pub fn height(&self) -> usize {
        self.y.height()
    }

    pub fn planes(&self) -> [&FramePlane; 3] {
        [&self.y, &self.cb, &self.cr]
    }

    fn payload_len(&self) -> usize {
        self.planes().iter().map(|p| p.samples().len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameRate {
    pub num: u32,
    pub den: u32,
}

impl FrameRate {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(contract(format!("frame rate {num}:{den}")));
        }
        Ok(Self { num, den })
    }
}

impl Default for FrameRate {
    fn default() -> Self {
        Self { num: 30, den: 1 }
    }
}

/// 4:2:0 chroma siting variants of the YUV4MPEG2 `C` tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChromaSiting {
    #[default]
    Jpeg,
    Mpeg2,
    PalDv,
    /// Bare `C420`.
    Generic,
}

impl ChromaSiting {
    fn tag(self) -> &'static str {
        match self {
            ChromaSiting::Jpeg => "420jpeg",
            ChromaSiting::Mpeg2 => "420mpeg2",
            ChromaSiting::PalDv => "420paldv",
            ChromaSiting::Generic => "420",
        }
    }

    fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "420jpeg" => ChromaSiting::Jpeg,
            "420mpeg2" => ChromaSiting::Mpeg2,
            "420paldv" => ChromaSiting::PalDv,
            "420" => ChromaSiting::Generic,
            _ => return None,
        })
    }
}

/// An ordered list of 4:2:0 8-bit progressive frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VideoSequence {
    frames: Vec<Frame>,
    pub frame_rate: FrameRate,
    pub pixel_aspect: Option<(u32, u32)>,
    pub chroma_siting: ChromaSiting,
    /// `X` header parameters, carried through verbatim.
    pub metadata: Vec<String>,
}

impl VideoSequence {
    pub fn new(frames: Vec<Frame>, frame_rate: FrameRate) -> Result<Self> {
        let Some(first) = frames.first() else {
            return Err(contract("a sequence needs at least one frame"));
        };
        let (w, h) = (first.width(), first.height());
        if let Some(i) = frames.iter().position(|f| f.width() != w || f.height() != h) {
            return Err(contract(format!(
                "frame {i} is {}x{}, sequence is {w}x{h}",
                frames[i].width(),
                frames[i].height()
            )));
        }
        Ok(Self {
            frames,
            frame_rate,
            pixel_aspect: None,
            chroma_siting: ChromaSiting::default(),
            metadata: Vec::new(),
        })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    pub fn height(&self) -> usize {
        self.frames[0].height()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    fn header_line(&self) -> String {
        let mut line = format!(
            "YUV4MPEG2 W{} H{} F{}:{} Ip",
            self.width(),
            self.height(),
            self.frame_rate.num,
            self.frame_rate.den
        );
        if let Some((a, b)) = self.pixel_aspect {
            line.push_str(&format!(" A{a}:{b}"));
        }
        line.push_str(" C");
        line.push_str(self.chroma_siting.tag());
        for x in &self.metadata {
            line.push_str(" X");
            line.push_str(x);
        }
        line.push('\n');
        line
    }
}

const SIGNATURE: &[u8] = b"YUV4MPEG2 ";
const FRAME_TAG: &[u8] = b"FRAME";
const MAX_LINE: usize = 4096;

fn read_line<R: BufRead>(r: &mut R, what: &str) -> Result<Option<Vec<u8>>> {
    let mut buf = Vec::new();
    let n = r.by_ref().take(MAX_LINE as u64).read_until(b'\n', &mut buf)?;
    if n == 0 {
        return Ok(None);
    }
    if buf.last() != Some(&b'\n') {
        if buf.len() >= MAX_LINE {
            return Err(Error::Parse(format!("{what} line exceeds {MAX_LINE} bytes")));
        }
        return Err(Error::TruncatedStream(format!("{what} line not terminated")));
    }
    buf.pop();
    Ok(Some(buf))
}

fn parse_ratio(s: &str, what: &str) -> Result<(u32, u32)> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("{what} '{s}' is not a ratio")))?;
    let a = a
        .parse()
        .map_err(|_| Error::Parse(format!("{what} numerator '{a}'")))?;
    let b = b
        .parse()
        .map_err(|_| Error::Parse(format!("{what} denominator '{b}'")))?;
    Ok((a, b))
}

fn parse_dim(s: &str, what: &str) -> Result<usize> {
    match s.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(Error::Parse(format!("{what} '{s}'"))),
    }
}

/// Parse a YUV4MPEG2 stream. Only progressive 4:2:0 8-bit input is accepted.
pub fn read_y4m<R: Read>(reader: R) -> Result<VideoSequence> {
    let mut r = BufReader::new(reader);
    let header = read_line(&mut r, "header")?
        .ok_or_else(|| Error::Parse("empty stream".into()))?;
    if !header.starts_with(SIGNATURE) {
        return Err(Error::Parse("missing YUV4MPEG2 signature".into()));
    }
    let header = std::str::from_utf8(&header[SIGNATURE.len()..])
        .map_err(|_| Error::Parse("header is not ASCII".into()))?;

    let (mut width, mut height, mut rate) = (None, None, None);
    let mut aspect = None;
    let mut siting = ChromaSiting::Jpeg;
    let mut metadata = Vec::new();
    for tok in header.split(' ').filter(|t| !t.is_empty()) {
        let (tag, val) = tok.split_at(1);
        match tag {
            "W" => width = Some(parse_dim(val, "width")?),
            "H" => height = Some(parse_dim(val, "height")?),
            "F" => {
                let (n, d) = parse_ratio(val, "frame rate")?;
                rate = Some(
                    FrameRate::new(n, d)
                        .map_err(|_| Error::Parse(format!("frame rate {n}:{d}")))?,
                );
            }
            "I" => match val {
                "p" | "?" => {}
                "t" | "b" | "m" => {
                    return Err(Error::UnsupportedFormat(format!("interlacing mode '{val}'")))
                }
                _ => return Err(Error::Parse(format!("interlacing tag '{val}'"))),
            },
            "A" => {
                let (a, b) = parse_ratio(val, "pixel aspect")?;
                aspect = (a != 0 || b != 0).then_some((a, b));
            }
            "C" => {
                siting = ChromaSiting::from_tag(val)
                    .ok_or_else(|| Error::UnsupportedFormat(format!("colorspace C{val}")))?
            }
            "X" => metadata.push(val.to_string()),
            _ => return Err(Error::Parse(format!("unknown header token '{tok}'"))),
        }
    }
    let width = width.ok_or_else(|| Error::Parse("header lacks W".into()))?;
    let height = height.ok_or_else(|| Error::Parse("header lacks H".into()))?;
    let rate = rate.ok_or_else(|| Error::Parse("header lacks F".into()))?;
    let (cw, ch) = chroma_dims(width, height);

    let mut frames = Vec::new();
    while let Some(line) = read_line(&mut r, "frame")? {
        if !line.starts_with(FRAME_TAG) || !matches!(line.get(FRAME_TAG.len()), None | Some(b' ')) {
            return Err(Error::Parse(format!(
                "expected FRAME marker before frame {}",
                frames.len()
            )));
        }
        let mut plane = |w: usize, h: usize, name: &str| -> Result<FramePlane> {
            let mut buf = vec![0u8; w * h];
            r.read_exact(&mut buf).map_err(|e| match e.kind() {
                std::io::ErrorKind::UnexpectedEof => Error::TruncatedStream(format!(
                    "frame {} {name} plane is short",
                    frames.len()
                )),
                _ => Error::Io(e),
            })?;
            FramePlane::new(w, h, buf)
        };
        let y = plane(width, height, "luma")?;
        let cb = plane(cw, ch, "cb")?;
        let cr = plane(cw, ch, "cr")?;
        frames.push(Frame::new(y, cb, cr)?);
    }
    if frames.is_empty() {
        return Err(Error::Parse("stream contains no frames".into()));
    }
    let mut seq = VideoSequence::new(frames, rate)?;
    seq.pixel_aspect = aspect;
    seq.chroma_siting = siting;
    seq.metadata = metadata;
    Ok(seq)
}

/// Serialize `seq` as YUV4MPEG2 and return the number of bytes written.
pub fn write_y4m<W: Write>(seq: &VideoSequence, mut sink: W) -> Result<u64> {
    if seq.is_empty() {
        return Err(contract("a sequence needs at least one frame"));
    }
    let header = seq.header_line();
    sink.write_all(header.as_bytes())?;
    let mut written = header.len() as u64;
    for frame in seq.frames() {
        sink.write_all(b"FRAME\n")?;
        for p in frame.planes() {
            sink.write_all(p.samples())?;
        }
        written += 6 + frame.payload_len() as u64;
    }
    sink.flush()?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_clip() -> Vec<u8> {
        let mut v = b"YUV4MPEG2 W4 H4 F25:1 Ip C420jpeg\nFRAME\n".to_vec();
        v.extend(std::iter::repeat_n(0, 16 + 8));
        v
    }

    #[test]
    fn reads_single_zero_frame() {
        let seq = read_y4m(&zero_clip()[..]).unwrap();
        assert_eq!(seq.len(), 1);
        assert_eq!(seq.frames()[0].y.samples(), &[0u8; 16]);
        assert_eq!(seq.frame_rate, FrameRate { num: 25, den: 1 });
        assert_eq!(seq.frames()[0].cb.width(), 2);
    }

    #[test]
    fn rejects_444() {
        let data = b"YUV4MPEG2 W4 H4 F25:1 C444\nFRAME\n";
        assert!(matches!(read_y4m(&data[..]), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn rejects_high_bit_depth_and_interlace() {
        for hdr in ["W4 H4 F25:1 C420p10", "W4 H4 F25:1 It C420", "W4 H4 F25:1 Cmono"] {
            let data = format!("YUV4MPEG2 {hdr}\n");
            assert!(
                matches!(read_y4m(data.as_bytes()), Err(Error::UnsupportedFormat(_))),
                "{hdr}"
            );
        }
    }

    #[test]
    fn bad_signature_is_parse_error() {
        assert!(matches!(read_y4m(&b"YUV4MPEG W4 H4 F1:1\n"[..]), Err(Error::Parse(_))));
        assert!(matches!(read_y4m(&b""[..]), Err(Error::Parse(_))));
    }

    #[test]
    fn truncated_payload() {
        let mut data = zero_clip();
        data.truncate(data.len() - 3);
        assert!(matches!(read_y4m(&data[..]), Err(Error::TruncatedStream(_))));
    }

    #[test]
    fn missing_chroma_tag_defaults_to_420() {
        let mut data = b"YUV4MPEG2 W3 H3 F30000:1001\nFRAME\n".to_vec();
        data.extend(std::iter::repeat_n(7, 9 + 8));
        let seq = read_y4m(&data[..]).unwrap();
        assert_eq!(seq.frames()[0].cr.width(), 2);
        assert_eq!(seq.frame_rate.den, 1001);
    }

    #[test]
    fn write_byte_count() {
        let seq = read_y4m(&zero_clip()[..]).unwrap();
        let mut out = Vec::new();
        let n = write_y4m(&seq, &mut out).unwrap();
        let header = "YUV4MPEG2 W4 H4 F25:1 Ip C420jpeg\n".len() as u64;
        assert_eq!(n, header + 6 + 16 + 2 * 4);
        assert_eq!(n, out.len() as u64);
        assert_eq!(out, zero_clip());
    }

    #[test]
    fn empty_sequence_is_contract_violation() {
        assert!(matches!(
            VideoSequence::new(Vec::new(), FrameRate::default()),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn frame_params_after_marker_are_skipped() {
        let mut data = b"YUV4MPEG2 W2 H2 F1:1\nFRAME Ixyz\n".to_vec();
        data.extend([1, 2, 3, 4, 5, 6]);
        let seq = read_y4m(&data[..]).unwrap();
        assert_eq!(seq.frames()[0].y.samples(), &[1, 2, 3, 4]);
        assert_eq!(seq.frames()[0].cr.samples(), &[6]);
    }
}
