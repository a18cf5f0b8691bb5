//! 16-bit PCM mono WAV I/O. Full scale maps to `±full_scale` volts.

use std::path::Path;

use crate::error::{invalid, Error, Result};

use super::Signal;

fn io_err(e: hound::Error) -> Error {
    Error::Io(e.to_string())
}

/// Reads a WAV file; multi-channel files contribute their first channel.
pub fn read_wav(path: &Path, full_scale: f64) -> Result<Signal> {
    let mut reader = hound::WavReader::open(path).map_err(io_err)?;
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;
    let samples: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Int => {
            let max = (1i64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .samples::<i32>()
                .step_by(channels)
                .map(|s| s.map(|v| v as f64 / max * full_scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(io_err)?
        }
        hound::SampleFormat::Float => reader
            .samples::<f32>()
            .step_by(channels)
            .map(|s| s.map(|v| v as f64 * full_scale))
            .collect::<std::result::Result<_, _>>()
            .map_err(io_err)?,
    };
    Signal::new(samples, spec.sample_rate as f64)
}

/// Writes a 16-bit mono WAV, clipping at full scale.
pub fn write_wav(path: &Path, signal: &Signal, full_scale: f64) -> Result<()> {
    if !(full_scale > 0.0) {
        return Err(invalid("full scale must be positive"));
    }
    let rate = signal.sample_rate();
    if rate.fract() != 0.0 || rate > u32::MAX as f64 {
        return Err(invalid("WAV needs an integral sample rate"));
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: rate as u32,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(io_err)?;
    for &x in signal.samples() {
        let v = (x / full_scale * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(v).map_err(io_err)?;
    }
    writer.finalize().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_within_one_lsb() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tone.wav");
        let s = Signal::sine(440.0, 0.9, 48e3, 4800).unwrap();
        write_wav(&path, &s, 1.0).unwrap();
        let back = read_wav(&path, 1.0).unwrap();
        assert_eq!(back.sample_rate(), 48e3);
        assert_eq!(back.len(), s.len());
        for (a, b) in s.samples().iter().zip(back.samples()) {
            assert!((a - b).abs() <= 0.5 / 32768.0 + 1e-12);
        }
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"RIFF");
        assert_eq!(bytes.len(), 44 + 2 * 4800);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            read_wav(Path::new("/nonexistent/x.wav"), 1.0),
            Err(Error::Io(_))
        ));
    }
}
