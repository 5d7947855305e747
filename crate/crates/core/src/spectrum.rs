//! Spectral estimators: Welch power spectral density and SNDR.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::signal::SampledSignal;
use crate::{Error, Result};

/// One-sided power spectral density estimate in V^2/Hz.
#[derive(Debug, Clone)]
pub struct PsdEstimate {
    /// Bin center frequencies in Hz, strictly increasing from 0.
    pub freqs: Vec<f64>,
    /// Density per bin in V^2/Hz.
    pub psd: Vec<f64>,
    /// Sample rate of the analyzed record.
    pub fs: f64,
    /// Number of averaged segments.
    pub segments: usize,
}

/// Welch PSD with a periodic Hann window.
///
/// `overlap` is the fractional segment overlap in `[0, 1)`; 0.5 is the usual
/// choice. Scaling follows the standard density convention
/// `Pxx = |X_k|^2 / (fs * sum(w^2))` with one-sided doubling, so integrating
/// the estimate over frequency recovers signal power (Parseval).
pub fn welch_psd(x: &SampledSignal, seg_len: usize, overlap: f64) -> Result<PsdEstimate> {
    x.validate()?;
    if seg_len < 16 {
        return Err(Error::Spectrum(format!("segment length must be >= 16, got {seg_len}")));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::Spectrum(format!("overlap must be in [0, 1), got {overlap}")));
    }
    if x.len() < seg_len {
        return Err(Error::Spectrum(format!(
            "record of {} samples is shorter than one segment of {seg_len}",
            x.len()
        )));
    }

    let n = seg_len;
    let hop = (n - (overlap * n as f64).floor() as usize).max(1);
    let window: Vec<f64> = (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()))
        .collect();
    let u: f64 = window.iter().map(|w| w * w).sum();
    let scale = 1.0 / (x.fs * u);

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let half = n / 2;
    let mut acc = vec![0.0f64; half + 1];
    let mut segments = 0usize;
    let mut start = 0usize;
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    while start + n <= x.len() {
        for i in 0..n {
            buf[i] = Complex::new(x.samples[start + i] * window[i], 0.0);
        }
        fft.process(&mut buf);
        for (k, slot) in acc.iter_mut().enumerate() {
            let p = buf[k].norm_sqr() * scale;
            // One-sided: double everything except DC and Nyquist.
            let one_sided = if k == 0 || (n % 2 == 0 && k == half) { p } else { 2.0 * p };
            *slot += one_sided;
        }
        segments += 1;
        start += hop;
    }

    let inv = 1.0 / segments as f64;
    let psd: Vec<f64> = acc.into_iter().map(|p| p * inv).collect();
    let freqs: Vec<f64> = (0..=half).map(|k| k as f64 * x.fs / n as f64).collect();
    Ok(PsdEstimate { freqs, psd, fs: x.fs, segments })
}

/// Integrates a PSD estimate over `[f_lo, f_hi]`, returning power in V^2.
pub fn integrate_psd(p: &PsdEstimate, f_lo: f64, f_hi: f64) -> f64 {
    if p.freqs.len() < 2 {
        return 0.0;
    }
    let df = p.freqs[1] - p.freqs[0];
    p.freqs
        .iter()
        .zip(&p.psd)
        .filter(|(f, _)| **f >= f_lo && **f <= f_hi)
        .map(|(_, v)| v * df)
        .sum()
}

/// SNDR of a tone record over the default 10 Hz..fs/2 analysis band.
pub fn sndr(y: &SampledSignal, f0: f64) -> Result<f64> {
    sndr_in_band(y, f0, 10.0, y.fs / 2.0)
}

/// Signal-to-noise-and-distortion ratio in dB.
///
/// The record is truncated to a whole number of fundamental periods (at
/// least 20 are required) and transformed with a rectangular window; the
/// fundamental is the energy in the bin at `f0` plus one guard bin on each
/// side, and everything else inside `[f_lo, f_hi]` except DC counts as
/// noise-plus-distortion.
pub fn sndr_in_band(y: &SampledSignal, f0: f64, f_lo: f64, f_hi: f64) -> Result<f64> {
    y.validate()?;
    if !(f0.is_finite() && f0 > 0.0 && f0 < y.fs / 2.0) {
        return Err(Error::Spectrum(format!(
            "fundamental must lie below Nyquist, got {f0} at fs {}",
            y.fs
        )));
    }
    if !(f_lo >= 0.0 && f_hi > f_lo) {
        return Err(Error::Spectrum(format!("bad analysis band {f_lo}..{f_hi}")));
    }
    let periods = (y.len() as f64 * f0 / y.fs).floor();
    if periods < 20.0 {
        return Err(Error::Spectrum(format!(
            "record holds only {periods} fundamental periods; need at least 20"
        )));
    }
    let n = (periods * y.fs / f0).floor() as usize;
    let n = n.min(y.len());

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let mut buf: Vec<Complex<f64>> = y.samples[..n]
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .collect();
    fft.process(&mut buf);

    let df = y.fs / n as f64;
    let k0 = (f0 / df).round() as usize;
    let half = n / 2;
    let fund_lo = k0.saturating_sub(1).max(1);
    let fund_hi = (k0 + 1).min(half);

    let mut p_fund = 0.0;
    let mut p_rest = 0.0;
    for k in 1..=half {
        let f = k as f64 * df;
        if f < f_lo || f > f_hi {
            continue;
        }
        let p = buf[k].norm_sqr();
        if (fund_lo..=fund_hi).contains(&k) {
            p_fund += p;
        } else {
            p_rest += p;
        }
    }
    if p_fund == 0.0 {
        return Err(Error::Spectrum("no fundamental energy in the analysis band".into()));
    }
    if p_rest == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (p_fund / p_rest).log10())
}
