//! WAV input/output for stimulus and reconstructed signals.
//!
//! Loading maps digital full scale to `scale` volts and takes the first
//! channel of multichannel files. Saving writes mono 32-bit float, so the
//! volt values go to disk unscaled (minus the f64 -> f32 rounding); the time
//! origin is not representable in WAV and is dropped.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::signal::SampledSignal;
use crate::{Error, Result};

/// Loads a WAV file, scaling full-scale to `scale` volts.
///
/// Accepts 16/24/32-bit integer PCM and 32-bit float; anything else is
/// rejected rather than guessed at.
pub fn load_wav(path: &Path, scale: f64) -> Result<SampledSignal> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::UnsupportedInput(format!(
            "input scale must be positive, got {scale}"
        )));
    }
    let mut reader = WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels == 0 {
        return Err(Error::UnsupportedInput("WAV file declares zero channels".into()));
    }
    let step = spec.channels as usize;
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, bits @ (16 | 24 | 32)) => {
            let full_scale = (1u64 << (bits - 1)) as f64;
            reader
                .samples::<i32>()
                .step_by(step)
                .map(|s| s.map(|v| v as f64 / full_scale * scale))
                .collect::<std::result::Result<_, _>>()?
        }
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .step_by(step)
            .map(|s| s.map(|v| v as f64 * scale))
            .collect::<std::result::Result<_, _>>()?,
        (fmt, bits) => {
            return Err(Error::UnsupportedInput(format!(
                "unsupported WAV format: {bits}-bit {fmt:?}; use 16/24/32-bit int or 32-bit float"
            )))
        }
    };
    SampledSignal::from_samples(spec.sample_rate as f64, samples)
}

/// Saves a signal as a mono 32-bit float WAV file.
pub fn save_wav(path: &Path, x: &SampledSignal) -> Result<()> {
    if x.fs < 1.0 || x.fs > u32::MAX as f64 || (x.fs - x.fs.round()).abs() > 1e-6 {
        return Err(Error::UnsupportedInput(format!(
            "WAV needs an integral sample rate in 1..=u32::MAX, got {}",
            x.fs
        )));
    }
    let spec = WavSpec {
        channels: 1,
        sample_rate: x.fs.round() as u32,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut writer = WavWriter::create(path, spec)?;
    for &v in &x.samples {
        writer.write_sample(v as f32)?;
    }
    writer.finalize()?;
    Ok(())
}
