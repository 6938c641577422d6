//! Wire formats: the serial frame link, OSC messages, and the latency probe.

pub mod latency;
pub mod osc;
pub mod serial;

pub use latency::{measure_latency, EchoServer, LatencyError, LatencyStats, ProbeOptions};
pub use osc::{
    decode_osc_frame, decode_ping, encode_osc_frame, encode_ping, OscError, Ping, DEFAULT_OSC_PORT,
    OSC_FRAME_LEN, OSC_PING_LEN,
};
pub use serial::{
    decode_stream, encode_frame, link_budget, DecodeTallies, FrameDecoder, LinkStats, FRAME_LEN,
};
