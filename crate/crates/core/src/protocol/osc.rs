//! Minimal OSC 1.0 message codec for surface frames and latency pings.
//!
//! Only what the controller needs: single messages (no bundles) with `i`
//! (int32), `h` (int64) and `b` (blob) arguments, all big-endian, every field
//! padded with zeros to a multiple of four bytes. Decoding is strict: non-zero
//! padding, trailing bytes, or unknown tags are rejected.

use thiserror::Error;

use crate::frame::{SurfaceFrame, MAX_COUNT, ROD_COUNT};

pub const FRAME_ADDRESS: &str = "/matrix/frame";
pub const PING_ADDRESS: &str = "/matrix/ping";
pub const DEFAULT_OSC_PORT: u16 = 9000;
/// Size of an encoded `/matrix/frame` message.
pub const OSC_FRAME_LEN: usize = 172;
/// Size of an encoded `/matrix/ping` message.
pub const OSC_PING_LEN: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OscError {
    #[error("unknown address {0:?}")]
    UnknownAddress(String),
    #[error("malformed packet: {0}")]
    Malformed(String),
    #[error("truncated blob: declared {declared} bytes, {available} available")]
    TruncatedBlob { declared: usize, available: usize },
}

fn malformed(msg: impl Into<String>) -> OscError {
    OscError::Malformed(msg.into())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OscArg {
    Int(i32),
    Long(i64),
    Blob(Vec<u8>),
}

impl OscArg {
    fn tag(&self) -> char {
        match self {
            OscArg::Int(_) => 'i',
            OscArg::Long(_) => 'h',
            OscArg::Blob(_) => 'b',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OscMessage {
    pub address: String,
    pub args: Vec<OscArg>,
}

fn pad4(n: usize) -> usize {
    (n + 3) & !3
}

fn write_padded_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(s.as_bytes());
    let len = pad4(s.len() + 1);
    out.resize(out.len() + (len - s.len()), 0);
}

impl OscMessage {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64);
        write_padded_str(&mut out, &self.address);
        let tags: String = std::iter::once(',').chain(self.args.iter().map(OscArg::tag)).collect();
        write_padded_str(&mut out, &tags);
        for arg in &self.args {
            match arg {
                OscArg::Int(v) => out.extend_from_slice(&v.to_be_bytes()),
                OscArg::Long(v) => out.extend_from_slice(&v.to_be_bytes()),
                OscArg::Blob(b) => {
                    out.extend_from_slice(&(b.len() as u32).to_be_bytes());
                    out.extend_from_slice(b);
                    out.resize(out.len() + pad4(b.len()) - b.len(), 0);
                }
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, OscError> {
        // Lengths that are not a multiple of four are caught field by field, so
        // a cut-off blob is reported as truncated rather than as bad alignment.
        if bytes.is_empty() {
            return Err(malformed("empty packet"));
        }
        let mut r = Reader { bytes, pos: 0 };
        let address = r.padded_str()?;
        if !address.starts_with('/') {
            return Err(malformed(format!("address {address:?} does not start with '/'")));
        }
        let tags = r.padded_str()?;
        let Some(tags) = tags.strip_prefix(',') else {
            return Err(malformed("type tag string does not start with ','"));
        };
        let mut args = Vec::with_capacity(tags.len());
        for tag in tags.chars() {
            args.push(match tag {
                'i' => OscArg::Int(i32::from_be_bytes(r.take_array()?)),
                'h' => OscArg::Long(i64::from_be_bytes(r.take_array()?)),
                'b' => {
                    let declared = u32::from_be_bytes(r.take_array()?) as usize;
                    let available = bytes.len() - r.pos;
                    if declared > available {
                        return Err(OscError::TruncatedBlob { declared, available });
                    }
                    let blob = r.take(declared)?.to_vec();
                    r.zero_padding(pad4(declared) - declared)?;
                    OscArg::Blob(blob)
                }
                other => return Err(malformed(format!("unsupported type tag {other:?}"))),
            });
        }
        if r.pos != bytes.len() {
            return Err(malformed(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Self { address, args })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], OscError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| malformed("packet ends mid-field"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn take_array<const N: usize>(&mut self) -> Result<[u8; N], OscError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn zero_padding(&mut self, n: usize) -> Result<(), OscError> {
        if self.take(n)?.iter().any(|&b| b != 0) {
            return Err(malformed("non-zero padding"));
        }
        Ok(())
    }

    fn padded_str(&mut self) -> Result<String, OscError> {
        let rest = &self.bytes[self.pos..];
        let nul = rest
            .iter()
            .position(|&b| b == 0)
            .ok_or_else(|| malformed("unterminated string"))?;
        let s = std::str::from_utf8(&rest[..nul])
            .map_err(|_| malformed("string is not UTF-8"))?
            .to_string();
        self.take(nul + 1)?;
        self.zero_padding(pad4(nul + 1) - (nul + 1))?;
        Ok(s)
    }
}

/// `/matrix/frame ,ib seq positions-blob`.
pub fn encode_osc_frame(frame: &SurfaceFrame) -> Vec<u8> {
    OscMessage {
        address: FRAME_ADDRESS.to_string(),
        args: vec![
            OscArg::Int(frame.seq() as i32),
            OscArg::Blob(frame.positions().to_vec()),
        ],
    }
    .encode()
}

pub fn decode_osc_frame(bytes: &[u8]) -> Result<SurfaceFrame, OscError> {
    let msg = OscMessage::decode(bytes)?;
    if msg.address != FRAME_ADDRESS {
        return Err(OscError::UnknownAddress(msg.address));
    }
    match msg.args.as_slice() {
        [OscArg::Int(seq), OscArg::Blob(positions)] => {
            if !(0..=MAX_COUNT as i32).contains(seq) {
                return Err(malformed(format!("sequence number {seq} out of range")));
            }
            if positions.len() != ROD_COUNT {
                return Err(malformed(format!("blob holds {} positions, expected 144", positions.len())));
            }
            SurfaceFrame::from_slice(*seq as u8, positions).map_err(|e| malformed(e.to_string()))
        }
        _ => Err(malformed("expected type tags ,ib")),
    }
}

/// Latency probe: id plus the sender's clock in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ping {
    pub id: u32,
    pub sent_us: u64,
}

pub fn encode_ping(ping: Ping) -> Vec<u8> {
    OscMessage {
        address: PING_ADDRESS.to_string(),
        args: vec![OscArg::Int(ping.id as i32), OscArg::Long(ping.sent_us as i64)],
    }
    .encode()
}

pub fn decode_ping(bytes: &[u8]) -> Result<Ping, OscError> {
    let msg = OscMessage::decode(bytes)?;
    if msg.address != PING_ADDRESS {
        return Err(OscError::UnknownAddress(msg.address));
    }
    match msg.args.as_slice() {
        [OscArg::Int(id), OscArg::Long(t)] => Ok(Ping {
            id: *id as u32,
            sent_us: *t as u64,
        }),
        _ => Err(malformed("expected type tags ,ih")),
    }
}
