//! Input-referred noise synthesis: a white floor plus a 1/f (flicker)
//! component shaped by a pole-zero ladder.
//!
//! The flicker shaper cascades first-order low-shelf sections with poles
//! every third of a decade and each zero a sixth of a decade above its pole,
//! which approximates a -10 dB/decade power slope with well under +/-0.5 dB
//! of ripple. The ladder spans four decades below the corner up to roughly
//! 1.5 decades above it (capped at 0.4*fs), and the driving white level is
//! calibrated against the realized discrete cascade so the shaped PSD equals
//! the white density exactly at the corner frequency.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::config::NoiseModel;
use crate::{Error, Result};

/// Sections per decade of the flicker ladder.
const SECTIONS_PER_DECADE: f64 = 3.0;
/// Decades covered below the corner frequency.
const DECADES_BELOW: f64 = 4.0;
/// Decades covered above the corner frequency (subject to the fs cap).
const DECADES_ABOVE: f64 = 1.5;

/// One bilinear-discretized shelf `H(s) = (1 + s/wz) / (1 + s/wp)`.
#[derive(Debug, Clone)]
struct ShelfSection {
    b0: f64,
    b1: f64,
    a1: f64,
    z: f64,
}

impl ShelfSection {
    fn design(fp: f64, fz: f64, fs: f64) -> ShelfSection {
        let wp = 2.0 * std::f64::consts::PI * fp;
        let wz = 2.0 * std::f64::consts::PI * fz;
        // Pre-warp at the geometric center of the transition.
        let wm = (wp * wz).sqrt();
        let k = wm / (wm / (2.0 * fs)).tan();
        let den = 1.0 + k / wp;
        ShelfSection {
            b0: (1.0 + k / wz) / den,
            b1: (1.0 - k / wz) / den,
            a1: (1.0 - k / wp) / den,
            z: 0.0,
        }
    }

    #[inline]
    fn step(&mut self, x: f64) -> f64 {
        let y = x.mul_add(self.b0, self.z);
        self.z = x * self.b1 - self.a1 * y;
        y
    }

    fn response_at(&self, f: f64, fs: f64) -> Complex64 {
        let w = 2.0 * std::f64::consts::PI * f / fs;
        let z1 = Complex64::new(w.cos(), -w.sin());
        (self.b0 + self.b1 * z1) / (1.0 + self.a1 * z1)
    }
}

/// Seeded generator producing one noise sample per call.
#[derive(Debug)]
pub struct NoiseGenerator {
    rng: ChaCha12Rng,
    normal: Normal<f64>,
    white_scale: f64,
    flicker_scale: f64,
    sections: Vec<ShelfSection>,
    fs: f64,
}

impl NoiseGenerator {
    /// Builds a generator for `model` at sample rate `fs`.
    ///
    /// The model must be enabled; generation of a disabled model is a caller
    /// bug, not a zero signal.
    pub fn new(model: &NoiseModel, fs: f64, seed: u64) -> Result<NoiseGenerator> {
        if !model.enabled {
            return Err(Error::Signal("noise model is disabled".into()));
        }
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::Signal(format!("sample rate must be positive, got {fs}")));
        }
        if !(model.white_density.is_finite() && model.white_density > 0.0) {
            return Err(Error::Signal("white density must be positive".into()));
        }
        let corner = model.flicker_corner_hz;
        if !(corner.is_finite() && corner >= 0.0) {
            return Err(Error::Signal("flicker corner must be non-negative".into()));
        }
        if corner > 0.0 && corner >= 0.4 * fs {
            return Err(Error::Signal(format!(
                "flicker corner {corner} Hz requires a sample rate above {} Hz",
                corner / 0.4
            )));
        }

        let white_scale = model.white_density * (fs / 2.0).sqrt();
        let mut sections = Vec::new();
        let mut flicker_scale = 0.0;
        if corner > 0.0 {
            let ratio = 10f64.powf(1.0 / 6.0);
            let step = 10f64.powf(1.0 / SECTIONS_PER_DECADE);
            let f_top = (corner * 10f64.powf(DECADES_ABOVE)).min(0.4 * fs);
            let mut fp = corner * 10f64.powf(-DECADES_BELOW);
            while fp < f_top {
                let fz = (fp * ratio).min(0.45 * fs);
                sections.push(ShelfSection::design(fp, fz, fs));
                fp *= step;
            }
            // Calibrate the drive so the shaped PSD equals the white density
            // at the corner: PSD(fc) = scale^2 * (2/fs) * |Hc(fc)|^2 = d^2.
            let mut h = Complex64::new(1.0, 0.0);
            for s in &sections {
                h *= s.response_at(corner, fs);
            }
            flicker_scale = model.white_density * (fs / 2.0).sqrt() / h.norm();
        }

        Ok(NoiseGenerator {
            rng: ChaCha12Rng::seed_from_u64(seed),
            normal: Normal::new(0.0, 1.0).expect("unit normal"),
            white_scale,
            flicker_scale,
            sections,
            fs,
        })
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    /// Next noise sample in volts.
    #[inline]
    pub fn next_sample(&mut self) -> f64 {
        let white = self.normal.sample(&mut self.rng) * self.white_scale;
        if self.sections.is_empty() {
            return white;
        }
        let mut p = self.normal.sample(&mut self.rng) * self.flicker_scale;
        for s in &mut self.sections {
            p = s.step(p);
        }
        white + p
    }

    /// Generates `n` samples.
    pub fn generate(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.next_sample()).collect()
    }
}

/// Convenience wrapper: `n` samples of the model at `fs` under `seed`.
pub fn inject_noise(model: &NoiseModel, fs: f64, seed: u64, n: usize) -> Result<Vec<f64>> {
    Ok(NoiseGenerator::new(model, fs, seed)?.generate(n))
}
