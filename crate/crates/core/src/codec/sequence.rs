//! Sequence container.
//!
//! ```text
//! "FMVC"              magic
//! u16 version         = 1
//! u16 width, u16 height
//! u16 fps_num, u16 fps_den
//! u32 frame_count
//! f64 screen_width, f64 viewing_distance, f64 reserved
//! per frame:
//!     u16 gaze_x, u16 gaze_y, u8 fmsc_code
//!     u32 payload_len, payload
//! ```
//!
//! All multi-byte fields are little-endian. `fmsc_code` is `k` when the frame
//! was coded with a gaussian map of width `H/k`, and 0 otherwise.

use crate::codec::frame::{
    decode_frame_at, encode_frame, mid_gray_reference, EncodedFrame, EncoderConfig, FrameBitstream, BLOCK_SIZE,
};
use crate::codec::quant::QuantSchedule;
use crate::error::{bitstream, contract, Error, Result};
use crate::foveation::{quantize_map, FoveationMap, Gaze, LevelMap};
use crate::num::Real;
use crate::video::{chroma_dims, Frame, FrameRate, VideoSequence};

pub const MAGIC: [u8; 4] = *b"FMVC";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 4 + 2 * 5 + 4 + 8 * 3;
const FRAME_RECORD_LEN: usize = 2 + 2 + 1 + 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceHeader {
    pub width: u16,
    pub height: u16,
    pub fps_num: u16,
    pub fps_den: u16,
    pub frame_count: u32,
    pub screen_width: f64,
    pub viewing_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub gaze: Gaze,
    pub fmsc_code: u8,
    pub bitstream: FrameBitstream,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceBitstream {
    pub header: SequenceHeader,
    pub frames: Vec<FrameRecord>,
}

impl SequenceBitstream {
    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload_bytes() + self.frames.len() * FRAME_RECORD_LEN);
        out.extend_from_slice(&MAGIC);
        for v in [VERSION, h.width, h.height, h.fps_num, h.fps_den] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&h.frame_count.to_le_bytes());
        for v in [h.screen_width, h.viewing_distance, 0.0] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for f in &self.frames {
            out.extend_from_slice(&(f.gaze.x as u16).to_le_bytes());
            out.extend_from_slice(&(f.gaze.y as u16).to_le_bytes());
            out.push(f.fmsc_code);
            out.extend_from_slice(&(f.bitstream.byte_len() as u32).to_le_bytes());
            out.extend_from_slice(f.bitstream.payload());
        }
        out
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        let mut c = Cursor { data, pos: 0 };
        if c.take(4)? != MAGIC {
            return Err(bitstream(0, "bad magic, expected FMVC"));
        }
        let version = c.u16()?;
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let header = SequenceHeader {
            width: c.u16()?,
            height: c.u16()?,
            fps_num: c.u16()?,
            fps_den: c.u16()?,
            frame_count: c.u32()?,
            screen_width: c.f64()?,
            viewing_distance: c.f64()?,
        };
        let _reserved = c.f64()?;
        if header.width == 0 || header.height == 0 {
            return Err(bitstream(6, "zero frame dimension"));
        }
        if header.fps_num == 0 || header.fps_den == 0 {
            return Err(bitstream(10, "zero frame rate term"));
        }
        if header.frame_count == 0 {
            return Err(bitstream(14, "sequence declares no frames"));
        }
        let mut frames = Vec::new();
        for i in 0..header.frame_count {
            let at = c.pos;
            let gx = c.u16()?;
            let gy = c.u16()?;
            if gx >= header.width || gy >= header.height {
                return Err(bitstream(at, format!("frame {i} gaze ({gx}, {gy}) outside frame")));
            }
            let fmsc_code = c.u8()?;
            let len = c.u32()? as usize;
            let payload = c.take(len)?.to_vec();
            frames.push(FrameRecord {
                gaze: Gaze::new(gx as usize, gy as usize),
                fmsc_code,
                bitstream: FrameBitstream::new(payload),
            });
        }
        if c.pos != data.len() {
            return Err(bitstream(c.pos, "trailing bytes after last frame"));
        }
        Ok(Self { header, frames })
    }

    /// Sum of frame payload sizes in bytes, excluding container fields.
    pub fn payload_bytes(&self) -> usize {
        self.frames.iter().map(|f| f.bitstream.byte_len()).sum()
    }

    pub fn payload_bits(&self) -> u64 {
        self.payload_bytes() as u64 * 8
    }

    /// Payload bits per pixel over the whole sequence.
    pub fn bpp(&self) -> f64 {
        let h = &self.header;
        self.payload_bits() as f64 / (h.width as f64 * h.height as f64 * self.frames.len() as f64)
    }

    /// Byte offset of each frame's payload within [`Self::to_bytes`].
    fn payload_offsets(&self) -> Vec<usize> {
        let mut pos = HEADER_LEN;
        self.frames
            .iter()
            .map(|f| {
                pos += FRAME_RECORD_LEN;
                let at = pos;
                pos += f.bitstream.byte_len();
                at
            })
            .collect()
    }
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| bitstream(self.data.len(), "unexpected end of stream"))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const K: usize>(&mut self) -> Result<[u8; K]> {
        Ok(self.take(K)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }
}

/// Per-frame coding guide: where the viewer looks and the resulting levels.
#[derive(Debug, Clone)]
pub struct FrameGuide {
    pub gaze: Gaze,
    pub fmsc_code: u8,
    pub levels: LevelMap,
}

impl FrameGuide {
    pub fn from_map<T: Real>(map: &FoveationMap<T>, n: u8, fmsc_code: u8) -> Result<Self> {
        Ok(Self {
            gaze: map.gaze(),
            fmsc_code,
            levels: quantize_map(map, n)?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct EncodedSequence {
    pub bitstream: SequenceBitstream,
    pub frames: Vec<EncodedFrame>,
}

impl EncodedSequence {
    pub fn recons(&self) -> impl Iterator<Item = &Frame> {
        self.frames.iter().map(|f| &f.recon)
    }
}

fn to_u16(v: usize, what: &str) -> Result<u16> {
    u16::try_from(v).map_err(|_| contract(format!("{what} {v} does not fit the container")))
}

/// Encode every frame against the previous reconstruction; the first frame
/// is predicted from mid-gray.
pub fn encode_sequence(
    seq: &VideoSequence,
    guides: &[FrameGuide],
    sched: &QuantSchedule,
    cfg: &EncoderConfig,
    screen_width: f64,
    viewing_distance: f64,
) -> Result<EncodedSequence> {
    if guides.len() != seq.len() {
        return Err(contract(format!(
            "{} frame guides for {} frames",
            guides.len(),
            seq.len()
        )));
    }
    let header = SequenceHeader {
        width: to_u16(seq.width(), "width")?,
        height: to_u16(seq.height(), "height")?,
        fps_num: to_u16(seq.frame_rate.num as usize, "frame rate numerator")?,
        fps_den: to_u16(seq.frame_rate.den as usize, "frame rate denominator")?,
        frame_count: u32::try_from(seq.len()).map_err(|_| contract("too many frames"))?,
        screen_width,
        viewing_distance,
    };
    let mut prev = mid_gray_reference(seq.width(), seq.height())?;
    let mut frames = Vec::with_capacity(seq.len());
    let mut records = Vec::with_capacity(seq.len());
    for (frame, guide) in seq.frames().iter().zip(guides) {
        if guide.gaze.x >= seq.width() || guide.gaze.y >= seq.height() {
            return Err(contract("gaze outside the frame"));
        }
        let enc = encode_frame(frame, &prev, &guide.levels, sched, cfg)?;
        prev = enc.recon.clone();
        records.push(FrameRecord {
            gaze: guide.gaze,
            fmsc_code: guide.fmsc_code,
            bitstream: enc.bitstream.clone(),
        });
        frames.push(enc);
    }
    Ok(EncodedSequence {
        bitstream: SequenceBitstream {
            header,
            frames: records,
        },
        frames,
    })
}

pub fn decode_sequence(bits: &SequenceBitstream) -> Result<VideoSequence> {
    let h = &bits.header;
    if bits.frames.len() != h.frame_count as usize {
        return Err(bitstream(14, format!(
            "header declares {} frames, stream carries {}",
            h.frame_count,
            bits.frames.len()
        )));
    }
    let (w, ht) = (h.width as usize, h.height as usize);
    // Every luma block costs at least 9 bits and every chroma block 1, so a
    // short payload is refused before the reference frame is allocated.
    let (cw, ch) = chroma_dims(w, ht);
    let blocks = |a: usize, b: usize| a.div_ceil(BLOCK_SIZE) * b.div_ceil(BLOCK_SIZE);
    let min_bits = 24 + 9 * blocks(w, ht) + 2 * blocks(cw, ch);
    for (rec, at) in bits.frames.iter().zip(bits.payload_offsets()) {
        if rec.bitstream.byte_len() * 8 < min_bits {
            return Err(bitstream(at, format!("frame payload too short for {w}x{ht}")));
        }
    }
    let mut prev = mid_gray_reference(w, ht)?;
    let mut out = Vec::with_capacity(bits.frames.len());
    for (rec, at) in bits.frames.iter().zip(bits.payload_offsets()) {
        let frame = decode_frame_at(&rec.bitstream, &prev, at)?;
        out.push(frame.clone());
        prev = frame;
    }
    let rate = FrameRate::new(h.fps_num as u32, h.fps_den as u32)
        .map_err(|_| bitstream(10, "zero frame rate term"))?;
    VideoSequence::new(out, rate)
}

/// Parse and decode a serialized sequence.
pub fn decode_sequence_bytes(data: &[u8]) -> Result<VideoSequence> {
    decode_sequence(&SequenceBitstream::from_bytes(data)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::foveation::gaussian_map;
    use crate::video::FramePlane;

    fn clip(frames: usize) -> VideoSequence {
        let fs = (0..frames)
            .map(|t| {
                let y = FramePlane::from_fn(24, 16, |x, y| ((x * 9 + y * 5 + t * 3) % 251) as u8).unwrap();
                Frame::from_luma(y).unwrap()
            })
            .collect();
        VideoSequence::new(fs, FrameRate::new(25, 1).unwrap()).unwrap()
    }

    fn guides(seq: &VideoSequence) -> Vec<FrameGuide> {
        let map = gaussian_map::<f64>(Gaze::center(24, 16), 16.0 / 4.0, 24, 16).unwrap();
        vec![FrameGuide::from_map(&map, 16, 4).unwrap(); seq.len()]
    }

    fn encode(seq: &VideoSequence) -> EncodedSequence {
        encode_sequence(seq, &guides(seq), &QuantSchedule::default(), &EncoderConfig::default(), 0.02, 0.012).unwrap()
    }

    #[test]
    fn header_layout() {
        let seq = clip(2);
        let bytes = encode(&seq).bitstream.to_bytes();
        assert_eq!(&bytes[..4], b"FMVC");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        assert_eq!(u16::from_le_bytes([bytes[6], bytes[7]]), 24);
        assert_eq!(u16::from_le_bytes([bytes[8], bytes[9]]), 16);
        assert_eq!(u32::from_le_bytes(bytes[14..18].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(bytes[18..26].try_into().unwrap()), 0.02);
        assert_eq!(bytes[HEADER_LEN + 4], 4);
    }

    #[test]
    fn single_frame_round_trip() {
        let seq = clip(1);
        let enc = encode(&seq);
        let dec = decode_sequence_bytes(&enc.bitstream.to_bytes()).unwrap();
        assert_eq!(dec.frames()[0], enc.frames[0].recon);
        assert_eq!(dec.frame_rate, seq.frame_rate);
    }

    #[test]
    fn bpp_definition() {
        let seq = clip(3);
        let enc = encode(&seq);
        let bits: u64 = enc.frames.iter().map(|f| f.bitstream.bit_len()).sum();
        assert_eq!(enc.bitstream.bpp(), bits as f64 / (24.0 * 16.0 * 3.0));
    }

    #[test]
    fn container_errors() {
        let bytes = encode(&clip(2)).bitstream.to_bytes();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        let err = SequenceBitstream::from_bytes(&bad).unwrap_err();
        assert!(matches!(err, Error::Bitstream { offset: 0, .. }), "{err}");
        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert!(matches!(SequenceBitstream::from_bytes(&v2), Err(Error::UnsupportedVersion(2))));
        assert!(SequenceBitstream::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut more = bytes.clone();
        more.push(0);
        assert!(SequenceBitstream::from_bytes(&more).is_err());
    }

    #[test]
    fn guide_count_must_match() {
        let seq = clip(2);
        let g = guides(&seq);
        assert!(encode_sequence(&seq, &g[..1], &QuantSchedule::default(), &EncoderConfig::default(), 0.02, 0.012).is_err());
    }
}
