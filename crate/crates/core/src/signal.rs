//! Uniformly sampled real-valued signals.

use crate::{Error, Result};

/// A block of uniformly sampled data.
///
/// Invariants (checked by [`SampledSignal::new`] and [`SampledSignal::validate`]):
/// `fs > 0` and finite, at least one sample, all samples finite, and
/// `t0 >= 0` so that event timestamps derived from the block fit in
/// unsigned nanoseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    /// Sample rate in Hz.
    pub fs: f64,
    /// Time of the first sample in seconds.
    pub t0: f64,
    pub samples: Vec<f64>,
}

impl SampledSignal {
    pub fn new(fs: f64, t0: f64, samples: Vec<f64>) -> Result<Self> {
        let s = SampledSignal { fs, t0, samples };
        s.validate()?;
        Ok(s)
    }

    /// Builds a signal starting at t = 0 from raw samples.
    pub fn from_samples(fs: f64, samples: Vec<f64>) -> Result<Self> {
        SampledSignal::new(fs, 0.0, samples)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return Err(Error::Signal(format!("sample rate must be positive, got {}", self.fs)));
        }
        if !(self.t0.is_finite() && self.t0 >= 0.0) {
            return Err(Error::Signal(format!(
                "start time must be finite and non-negative, got {}",
                self.t0
            )));
        }
        if self.samples.is_empty() {
            return Err(Error::Signal("signal must contain at least one sample".into()));
        }
        if let Some(i) = self.samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Signal(format!("sample {i} is not finite")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration covered by the block in seconds (`len / fs`).
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    /// Time of sample `n` in seconds.
    pub fn time_at(&self, n: usize) -> f64 {
        self.t0 + n as f64 / self.fs
    }
}

/// Synthesizes `n` samples of `amp * sin(2*pi*f*t) + offset` starting at t = 0.
pub fn sine(fs: f64, f: f64, amp: f64, offset: f64, n: usize) -> Result<SampledSignal> {
    if !(f.is_finite() && f >= 0.0) {
        return Err(Error::Signal(format!("tone frequency must be non-negative, got {f}")));
    }
    let w = 2.0 * std::f64::consts::PI * f;
    let samples = (0..n).map(|i| amp * (w * (i as f64 / fs)).sin() + offset).collect();
    SampledSignal::new(fs, 0.0, samples)
}

/// Synthesizes `n` samples of a constant level starting at t = 0.
pub fn dc(fs: f64, level: f64, n: usize) -> Result<SampledSignal> {
    SampledSignal::new(fs, 0.0, vec![level; n])
}

/// Resamples a signal to `fs_out` with a windowed-sinc kernel.
///
/// The kernel uses 32 zero crossings per side under a Blackman window with
/// its cutoff at 0.45 of the lower of the two rates, which keeps images and
/// aliases below roughly -70 dB — far below the noise floors modeled here.
/// The output grid starts at `t0` and covers the same duration.
pub fn resample(x: &SampledSignal, fs_out: f64) -> Result<SampledSignal> {
    x.validate()?;
    if !(fs_out.is_finite() && fs_out > 0.0) {
        return Err(Error::Signal(format!("target rate must be positive, got {fs_out}")));
    }
    if x.fs == fs_out {
        return Ok(x.clone());
    }

    const TAPS_PER_SIDE: isize = 32;
    let ratio = fs_out / x.fs;
    // When decimating, widen the kernel so the cutoff still spans enough taps.
    let stretch = if ratio < 1.0 { 1.0 / ratio } else { 1.0 };
    let cutoff = 0.45 * ratio.min(1.0);
    let half = (TAPS_PER_SIDE as f64 * stretch).ceil() as isize;

    let n_out = ((x.len() as f64) * ratio).round().max(1.0) as usize;
    let n_in = x.len() as isize;
    let mut out = Vec::with_capacity(n_out);
    for m in 0..n_out {
        // Position of output sample m on the input grid.
        let pos = m as f64 / ratio;
        let center = pos.floor() as isize;
        let mut acc = 0.0;
        let mut wsum = 0.0;
        for k in (center - half)..=(center + half) {
            let dx = pos - k as f64;
            let sinc_arg = 2.0 * cutoff * dx;
            let sinc = if sinc_arg == 0.0 {
                1.0
            } else {
                let p = std::f64::consts::PI * sinc_arg;
                p.sin() / p
            };
            // Blackman window over the kernel span.
            let u = dx / (half as f64 + 1.0);
            if u.abs() >= 1.0 {
                continue;
            }
            let pu = std::f64::consts::PI * u;
            let w = 0.42 + 0.5 * pu.cos() + 0.08 * (2.0 * pu).cos();
            let tap = sinc * w;
            let sample = x.samples[k.clamp(0, n_in - 1) as usize];
            acc += tap * sample;
            wsum += tap;
        }
        // Normalizing by the tap sum keeps DC gain exactly 1 for any phase.
        out.push(if wsum != 0.0 { acc / wsum } else { 0.0 });
    }
    SampledSignal::new(fs_out, x.t0, out)
}
