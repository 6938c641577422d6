//! Offline decoding of captured byte streams.

use matrix_core::frame::SurfaceFrame;
use matrix_core::protocol::{decode_stream, DecodeTallies};
use matrix_core::sensing::{load_phases, track, ChannelTracker};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CaptureFormat {
    /// Serial frame link bytes.
    Frames,
    /// One quadrature phase per byte, bits 1:0, from a single rod.
    Phases,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameCapture {
    pub frames: Vec<SurfaceFrame>,
    pub tallies: DecodeTallies,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PhaseCapture {
    pub transitions: usize,
    /// Counter after replaying from boot.
    pub counter: u8,
    pub invalid: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Decoded {
    Frames(FrameCapture),
    Phases(PhaseCapture),
}

pub fn decode_capture(bytes: &[u8], format: CaptureFormat) -> Decoded {
    match format {
        CaptureFormat::Frames => {
            let (frames, tallies) = decode_stream(bytes);
            Decoded::Frames(FrameCapture { frames, tallies })
        }
        CaptureFormat::Phases => {
            let phases = load_phases(bytes);
            let out = track(ChannelTracker::new(), phases.iter().copied());
            Decoded::Phases(PhaseCapture {
                transitions: phases.len(),
                counter: out.counter,
                invalid: out.invalid,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use matrix_core::protocol::encode_frame;
    use matrix_core::sensing::{dump_phases, encode_motion, QuadPhase};

    #[test]
    fn frames_and_garbage() {
        let mut bytes = vec![0x12, 0xFF, 0x01];
        bytes.extend(encode_frame(&SurfaceFrame::uniform(3, 9)));
        let Decoded::Frames(c) = decode_capture(&bytes, CaptureFormat::Frames) else {
            panic!()
        };
        assert_eq!(c.frames, vec![SurfaceFrame::uniform(3, 9)]);
        assert!(!c.tallies.is_clean());
    }

    #[test]
    fn phase_replay() {
        let stream = encode_motion(0, 50, QuadPhase::default());
        let Decoded::Phases(p) = decode_capture(&dump_phases(&stream), CaptureFormat::Phases) else {
            panic!()
        };
        assert_eq!(p, PhaseCapture { transitions: 50, counter: 50, invalid: 0 });
    }
}
