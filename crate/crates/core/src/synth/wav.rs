//! 16-bit PCM mono RIFF/WAVE output and general WAV input.

use std::path::Path;

use hound::{SampleFormat, WavSpec};

use super::{AudioBuffer, SynthError};

const FULL_SCALE: f32 = 32767.0;

/// Writes a canonical 44-byte-header mono 16-bit file.
pub fn write_wav(buffer: &AudioBuffer, path: impl AsRef<Path>) -> Result<(), SynthError> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: buffer.sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec)?;
    {
        let mut w16 = w.get_i16_writer(buffer.samples.len() as u32);
        for &s in &buffer.samples {
            w16.write_sample((s.clamp(-1.0, 1.0) * FULL_SCALE).round() as i16);
        }
        w16.flush()?;
    }
    w.finalize()?;
    Ok(())
}

/// Reads any PCM or float WAV, downmixing to mono.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer, SynthError> {
    let mut r = hound::WavReader::open(path)?;
    let spec = r.spec();
    let channels = spec.channels.max(1) as usize;
    let interleaved: Vec<f32> = match spec.sample_format {
        SampleFormat::Float => r.samples::<f32>().collect::<Result<_, _>>()?,
        SampleFormat::Int => {
            let scale = ((1i64 << (spec.bits_per_sample - 1)) - 1) as f32;
            r.samples::<i32>()
                .map(|s| s.map(|v| (v as f32 / scale).clamp(-1.0, 1.0)))
                .collect::<Result<_, _>>()?
        }
    };
    let samples = interleaved
        .chunks(channels)
        .map(|c| c.iter().sum::<f32>() / channels as f32)
        .collect();
    Ok(AudioBuffer::new(samples, spec.sample_rate))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn silence_file_size() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.wav");
        write_wav(&AudioBuffer::silence(44100, 44100), &p).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(bytes.len(), 44 + 88200);
        assert_eq!(&bytes[0..4], b"RIFF");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 36 + 88200);
        assert_eq!(&bytes[8..16], b"WAVEfmt ");
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 16);
        assert_eq!(u16::from_le_bytes(bytes[20..22].try_into().unwrap()), 1);
        assert_eq!(u16::from_le_bytes(bytes[22..24].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[24..28].try_into().unwrap()), 44100);
        assert_eq!(u32::from_le_bytes(bytes[28..32].try_into().unwrap()), 88200);
        assert_eq!(u16::from_le_bytes(bytes[32..34].try_into().unwrap()), 2);
        assert_eq!(u16::from_le_bytes(bytes[34..36].try_into().unwrap()), 16);
        assert_eq!(&bytes[36..40], b"data");
        assert_eq!(u32::from_le_bytes(bytes[40..44].try_into().unwrap()), 88200);
    }

    #[test]
    fn sine_round_trip_within_one_lsb() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.wav");
        let buf = AudioBuffer::new(
            (0..4410)
                .map(|n| (std::f64::consts::TAU * 441.0 * n as f64 / 44100.0).sin() as f32)
                .collect(),
            44100,
        );
        write_wav(&buf, &p).unwrap();
        let back = read_wav(&p).unwrap();
        assert_eq!(back.sample_rate, 44100);
        assert_eq!(back.len(), buf.len());
        for (a, b) in buf.samples.iter().zip(&back.samples) {
            assert!((a - b).abs() <= 1.0 / 32768.0);
        }
    }

    #[test]
    fn empty_buffer_has_empty_data_chunk() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.wav");
        write_wav(&AudioBuffer::silence(0, 22050), &p).unwrap();
        assert_eq!(std::fs::metadata(&p).unwrap().len(), 44);
        assert!(read_wav(&p).unwrap().is_empty());
    }

    #[test]
    fn unwritable_path() {
        let r = write_wav(&AudioBuffer::silence(10, 8000), "/nonexistent-dir/x.wav");
        assert!(matches!(r, Err(SynthError::Wav(_))));
    }
}
