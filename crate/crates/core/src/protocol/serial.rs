//! Serial frame codec.
//!
//! ```text
//! [0xFF][seq][144 position bytes][checksum]     147 bytes
//! ```
//!
//! Every byte after the sync byte is 7-bit, so 0xFF can only ever appear at a
//! frame start and the decoder re-locks on the next sync without state. The
//! checksum is `(seq + sum(positions)) mod 128`.

use serde::Serialize;
use thiserror::Error;

use crate::frame::{FrameError, SurfaceFrame, ROD_COUNT};

pub const SYNC: u8 = 0xFF;
pub const FRAME_LEN: usize = ROD_COUNT + 3;

/// Bits on the wire per byte with 8N1 framing.
pub const BITS_PER_BYTE_8N1: f64 = 10.0;

pub fn checksum(seq: u8, positions: &[u8]) -> u8 {
    let sum = positions
        .iter()
        .fold(seq as u32, |acc, &p| acc + p as u32);
    (sum % 128) as u8
}

pub fn encode_frame(frame: &SurfaceFrame) -> [u8; FRAME_LEN] {
    let mut out = [0u8; FRAME_LEN];
    out[0] = SYNC;
    out[1] = frame.seq();
    out[2..FRAME_LEN - 1].copy_from_slice(frame.positions());
    out[FRAME_LEN - 1] = checksum(frame.seq(), frame.positions());
    out
}

/// Encodes unvalidated values, rejecting anything with the high bit set.
pub fn encode_raw(seq: u8, positions: &[u8]) -> Result<[u8; FRAME_LEN], FrameError> {
    Ok(encode_frame(&SurfaceFrame::from_slice(seq, positions)?))
}

/// Corruption counters kept by [`FrameDecoder`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DecodeTallies {
    pub bad_checksum: u64,
    /// Frames cut short by another high-bit byte or by end of stream.
    pub truncated: u64,
    /// Runs of bytes discarded while hunting for a sync byte.
    pub resync_count: u64,
}

impl DecodeTallies {
    pub fn is_clean(&self) -> bool {
        *self == Self::default()
    }
}

/// Incremental decoder; feed it arbitrary chunks of a byte stream.
#[derive(Debug, Default)]
pub struct FrameDecoder {
    buf: Vec<u8>,
    tallies: DecodeTallies,
    hunting: bool,
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn tallies(&self) -> DecodeTallies {
        self.tallies
    }

    /// Appends `bytes` and returns every frame completed by them.
    pub fn push(&mut self, bytes: &[u8]) -> Vec<SurfaceFrame> {
        let mut out = Vec::new();
        self.push_into(bytes, &mut out);
        out
    }

    pub fn push_into(&mut self, bytes: &[u8], out: &mut Vec<SurfaceFrame>) {
        self.buf.extend_from_slice(bytes);
        let mut start = 0;
        loop {
            let pending = &self.buf[start..];
            let Some(sync_at) = pending.iter().position(|&b| b == SYNC) else {
                if !pending.is_empty() {
                    self.note_garbage();
                }
                start = self.buf.len();
                break;
            };
            if sync_at > 0 {
                self.note_garbage();
                start += sync_at;
            }
            self.hunting = false;
            let pending = &self.buf[start..];
            let body_end = pending.len().min(FRAME_LEN);
            // A high-bit byte inside the body means this frame was cut short.
            if let Some(j) = pending[1..body_end].iter().position(|&b| b & 0x80 != 0) {
                self.tallies.truncated += 1;
                start += 1 + j;
                continue;
            }
            if pending.len() < FRAME_LEN {
                break;
            }
            let seq = pending[1];
            let positions = &pending[2..FRAME_LEN - 1];
            if checksum(seq, positions) == pending[FRAME_LEN - 1] {
                out.push(SurfaceFrame::from_slice(seq, positions).expect("7-bit by scan"));
            } else {
                self.tallies.bad_checksum += 1;
            }
            start += FRAME_LEN;
        }
        self.buf.drain(..start);
    }

    fn note_garbage(&mut self) {
        if !self.hunting {
            self.tallies.resync_count += 1;
            self.hunting = true;
        }
    }

    /// Ends the stream; a partial frame left in the buffer counts as truncated.
    pub fn finish(mut self) -> DecodeTallies {
        if self.buf.first() == Some(&SYNC) {
            self.tallies.truncated += 1;
        }
        self.tallies
    }
}

/// Decodes a complete capture.
pub fn decode_stream(bytes: &[u8]) -> (Vec<SurfaceFrame>, DecodeTallies) {
    let mut dec = FrameDecoder::new();
    let frames = dec.push(bytes);
    (frames, dec.finish())
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum BudgetError {
    #[error("baud rate must be positive, got {0}")]
    Baud(f64),
    #[error("frame length must be positive")]
    FrameLen,
}

/// Throughput of a serial link carrying fixed-size frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkStats {
    pub bytes_per_second: f64,
    pub max_fps: f64,
    pub utilization_at_30hz: f64,
}

/// Link budget assuming 8N1 framing.
pub fn link_budget(baud: f64, frame_len: usize) -> Result<LinkStats, BudgetError> {
    if !(baud.is_finite() && baud > 0.0) {
        return Err(BudgetError::Baud(baud));
    }
    if frame_len == 0 {
        return Err(BudgetError::FrameLen);
    }
    let bytes_per_second = baud / BITS_PER_BYTE_8N1;
    Ok(LinkStats {
        bytes_per_second,
        max_fps: bytes_per_second / frame_len as f64,
        utilization_at_30hz: 30.0 * frame_len as f64 / bytes_per_second,
    })
}
