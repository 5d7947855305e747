//! Second-order band-pass sections and the first-order servo high-pass.
//!
//! The band-pass biquad realizes the continuous-time prototype
//!
//! ```text
//!            (w0/Q) s
//! H(s) = -------------------      w0 = 2*pi*f0
//!        s^2 + (w0/Q) s + w0^2
//! ```
//!
//! via the bilinear transform, pre-warped so the discrete response is exact
//! at f0: substituting `s = K (1 - z^-1)/(1 + z^-1)` with
//! `K = w0 / tan(w0 T / 2)` maps analog frequency `W = K tan(pi f / fs)`
//! onto digital frequency `f`, and `W(f0) = w0` by construction.

use num_complex::Complex64;

use crate::{Error, Result};

/// Normalized coefficients of `H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiquadCoeffs {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
    /// Sample rate the section was designed for.
    pub fs: f64,
}

impl BiquadCoeffs {
    /// Evaluates the section response at frequency `f` in Hz.
    pub fn response_at(&self, f: f64) -> Complex64 {
        let w = 2.0 * std::f64::consts::PI * f / self.fs;
        let z1 = Complex64::new(w.cos(), -w.sin());
        let z2 = z1 * z1;
        (self.b0 + self.b1 * z1 + self.b2 * z2) / (1.0 + self.a1 * z1 + self.a2 * z2)
    }

    /// Largest pole magnitude.
    pub fn pole_radius(&self) -> f64 {
        let disc = self.a1 * self.a1 - 4.0 * self.a2;
        if disc < 0.0 {
            // Complex pair at radius sqrt(a2).
            self.a2.sqrt()
        } else {
            let r = disc.sqrt();
            let p1 = (-self.a1 + r) / 2.0;
            let p2 = (-self.a1 - r) / 2.0;
            p1.abs().max(p2.abs())
        }
    }

    /// Stability check via the direct-form triangle: `|a2| < 1` and
    /// `|a1| < 1 + a2`.
    pub fn is_stable(&self) -> bool {
        self.a2.abs() < 1.0 && self.a1.abs() < 1.0 + self.a2
    }
}

/// Designs one pre-warped band-pass section with unity gain at `f0`.
pub fn design_bandpass(f0: f64, q: f64, fs: f64) -> Result<BiquadCoeffs> {
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::Design(format!("sample rate must be positive, got {fs}")));
    }
    if !(f0.is_finite() && f0 > 0.0 && f0 < 0.45 * fs) {
        return Err(Error::Design(format!(
            "center frequency must satisfy 0 < f0 < 0.45*fs, got f0 {f0} at fs {fs}"
        )));
    }
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::Design(format!("quality factor must be positive, got {q}")));
    }
    let w0 = 2.0 * std::f64::consts::PI * f0;
    let k = w0 / (w0 / (2.0 * fs)).tan();
    let a = k * k;
    let b = w0 * k / q;
    let c = w0 * w0;
    let sum = a + b + c;
    Ok(BiquadCoeffs {
        b0: b / sum,
        b1: 0.0,
        b2: -b / sum,
        a1: (2.0 * c - 2.0 * a) / sum,
        a2: (a - b + c) / sum,
        fs,
    })
}

/// Analog frequency (Hz) that the bilinear transform maps onto digital
/// frequency `f` for a section pre-warped at `f0`.
pub fn warped_frequency(f: f64, f0: f64, fs: f64) -> f64 {
    let w0 = 2.0 * std::f64::consts::PI * f0;
    let k = w0 / (w0 / (2.0 * fs)).tan();
    k * (std::f64::consts::PI * f / fs).tan() / (2.0 * std::f64::consts::PI)
}

/// Continuous-time prototype response of one band-pass section.
pub fn bandpass_prototype_response(f0: f64, q: f64, f: f64) -> Complex64 {
    let w0 = 2.0 * std::f64::consts::PI * f0;
    let w = 2.0 * std::f64::consts::PI * f;
    let num = Complex64::new(0.0, w * w0 / q);
    let den = Complex64::new(w0 * w0 - w * w, w * w0 / q);
    num / den
}

/// -3 dB bandwidth of two identical prototype sections in cascade.
///
/// Each section obeys `|H|^2 = 1 / (1 + Q^2 (v - 1/v)^2)` with `v = f/f0`,
/// so the cascade reaches half power where `Q (v - 1/v) = sqrt(sqrt(2)-1)`,
/// and the two crossings are separated by exactly that value times `f0/Q`.
pub fn cascade_bandwidth(f0: f64, q: f64) -> f64 {
    (std::f64::consts::SQRT_2 - 1.0).sqrt() * f0 / q
}

/// Transposed direct-form II runtime for one section.
#[derive(Debug, Clone)]
pub struct Biquad {
    pub coeffs: BiquadCoeffs,
    z1: f64,
    z2: f64,
}

impl Biquad {
    pub fn new(coeffs: BiquadCoeffs) -> Self {
        Biquad { coeffs, z1: 0.0, z2: 0.0 }
    }

    pub fn reset(&mut self) {
        self.z1 = 0.0;
        self.z2 = 0.0;
    }

    #[inline]
    pub fn step(&mut self, x: f64) -> f64 {
        let c = &self.coeffs;
        let y = x.mul_add(c.b0, self.z1);
        self.z1 = x.mul_add(c.b1, self.z2) - c.a1 * y;
        self.z2 = x * c.b2 - c.a2 * y;
        y
    }
}

/// First-order high-pass (the DC servo loop), pre-warped at its corner so
/// the discrete response is exactly -3.01 dB at `fc`.
#[derive(Debug, Clone)]
pub struct Highpass1 {
    b0: f64,
    b1: f64,
    a1: f64,
    fs: f64,
    z: f64,
}

impl Highpass1 {
    pub fn design(fc: f64, fs: f64) -> Result<Highpass1> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::Design(format!("sample rate must be positive, got {fs}")));
        }
        if !(fc.is_finite() && fc > 0.0 && fc < 0.45 * fs) {
            return Err(Error::Design(format!(
                "corner must satisfy 0 < fc < 0.45*fs, got fc {fc} at fs {fs}"
            )));
        }
        let wc = 2.0 * std::f64::consts::PI * fc;
        let k = wc / (wc / (2.0 * fs)).tan();
        let sum = k + wc;
        Ok(Highpass1 {
            b0: k / sum,
            b1: -k / sum,
            a1: (wc - k) / sum,
            fs,
            z: 0.0,
        })
    }

    pub fn reset(&mut self) {
        self.z = 0.0;
    }

    #[inline]
    pub fn step(&mut self, x: f64) -> f64 {
        let y = x.mul_add(self.b0, self.z);
        self.z = x * self.b1 - self.a1 * y;
        y
    }

    pub fn response_at(&self, f: f64) -> Complex64 {
        let w = 2.0 * std::f64::consts::PI * f / self.fs;
        let z1 = Complex64::new(w.cos(), -w.sin());
        (self.b0 + self.b1 * z1) / (1.0 + self.a1 * z1)
    }
}

/// Continuous-time prototype of the servo high-pass, `H(s) = s/(s + wc)`.
pub fn highpass_prototype_response(fc: f64, f: f64) -> Complex64 {
    let jw = Complex64::new(0.0, 2.0 * std::f64::consts::PI * f);
    jw / (jw + 2.0 * std::f64::consts::PI * fc)
}
