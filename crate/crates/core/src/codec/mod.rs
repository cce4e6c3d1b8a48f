//! Block residual codec and its bitstream.

pub mod bits;
pub mod entropy;
pub mod frame;
pub mod quant;
pub mod sequence;
pub mod transform;

pub use entropy::{entropy_decode, entropy_encode};
pub use frame::{
    decode_frame, encode_frame, mid_gray_reference, DisplacementMode, EncodedFrame, EncoderConfig,
    FrameBitstream, BLOCK_SIZE,
};
pub use quant::{dequantize_coeffs, quantize_coeffs, QuantSchedule};
pub use sequence::{
    decode_sequence, decode_sequence_bytes, encode_sequence, EncodedSequence, FrameGuide,
    FrameRecord, SequenceBitstream, SequenceHeader, MAGIC,
};
pub use transform::{forward_transform, inverse_transform};
