//! The per-channel analog chain: LNA, DC servo high-pass, fourth-order
//! band-pass (two identical gm-C biquads), PGA, optional saturation, with
//! input-referred noise injection.

use num_complex::Complex64;

use crate::biquad::{
    bandpass_prototype_response, design_bandpass, highpass_prototype_response, Biquad, Highpass1,
};
use crate::config::{gain_from_code, validate_config, BpfConfig, ChannelConfig};
use crate::noise::NoiseGenerator;
use crate::rng::{derive_seed, Purpose};
use crate::signal::SampledSignal;
use crate::{Error, Result};

/// Center frequency and quality factor realized by a band-pass bias setting.
///
/// For the gm-C biquad, `w0 = sqrt(gm1*gm2/(C1*C2))` and
/// `Q = sqrt(gm2*C2/(gm1*C1))`; both sections share one setting.
pub fn bpf_params(bpf: &BpfConfig) -> (f64, f64) {
    let c1 = bpf.c1();
    let c2 = bpf.c2();
    let w0 = (bpf.gm1 * bpf.gm2 / (c1 * c2)).sqrt();
    let q = (bpf.gm2 * c2 / (bpf.gm1 * c1)).sqrt();
    (w0 / (2.0 * std::f64::consts::PI), q)
}

/// Bias setting that centers the filter at `f0` with quality factor `q`,
/// using full-code capacitors of base value `c_base` on both integrators.
pub fn bpf_for(f0: f64, q: f64, c_base: f64) -> BpfConfig {
    let w0 = 2.0 * std::f64::consts::PI * f0;
    BpfConfig {
        gm1: w0 * c_base / q,
        gm2: w0 * c_base * q,
        c1_code: 255,
        c2_code: 255,
        c_base,
    }
}

/// Default simulation rate for a set of channels: at least 48 kHz and at
/// least 32x the highest band-pass center frequency, which keeps bilinear
/// warping below half a dB through the analysis band of every channel.
pub fn choose_sim_rate(cfgs: &[ChannelConfig]) -> f64 {
    let mut fs: f64 = 48_000.0;
    for c in cfgs {
        let (f0, _) = bpf_params(&c.bpf);
        fs = fs.max(32.0 * f0);
    }
    fs
}

/// Time for the chain's transient to decay below ~5e-4 of its initial
/// amplitude: ten band-pass time constants (`tau = Q/(pi*f0)`; the cascade's
/// repeated pole contributes the extra `t/tau` envelope factor).
pub fn settle_time(cfg: &ChannelConfig) -> f64 {
    let (f0, q) = bpf_params(&cfg.bpf);
    10.0 * q / (std::f64::consts::PI * f0)
}

/// Continuous-time chain response (gains, servo high-pass, both band-pass
/// sections) at frequency `f`. Saturation is ignored: this is the
/// small-signal transfer function.
pub fn analytic_response(cfg: &ChannelConfig, f: f64) -> Complex64 {
    let (f0, q) = bpf_params(&cfg.bpf);
    let bp = bandpass_prototype_response(f0, q, f);
    let hp = highpass_prototype_response(cfg.dsl_cutoff_hz, f);
    let gain = gain_from_code(cfg.lna_gain) * gain_from_code(cfg.pga_gain);
    hp * bp * bp * gain
}

/// Runtime state of one channel's analog chain.
#[derive(Debug)]
pub struct Pipeline {
    cfg: ChannelConfig,
    fs: f64,
    lna: f64,
    pga: f64,
    hpf: Highpass1,
    bq1: Biquad,
    bq2: Biquad,
    noise: Option<NoiseGenerator>,
    noise_seed: u64,
}

impl Pipeline {
    /// Designs the chain for `cfg` at sample rate `fs`.
    ///
    /// `seed` is the master seed; the channel's noise stream is derived from
    /// it and is only consumed when the noise model is enabled.
    pub fn new(cfg: &ChannelConfig, fs: f64, seed: u64) -> Result<Pipeline> {
        let violations = validate_config(cfg);
        if !violations.is_empty() {
            let v = &violations[0];
            return Err(Error::config(v.path.clone(), v.message.clone()));
        }
        let (f0, q) = bpf_params(&cfg.bpf);
        let coeffs = design_bandpass(f0, q, fs)?;
        let hpf = Highpass1::design(cfg.dsl_cutoff_hz, fs)?;
        let noise_seed = derive_seed(seed, Purpose::Noise, cfg.channel);
        let noise = if cfg.noise.enabled {
            Some(NoiseGenerator::new(&cfg.noise, fs, noise_seed)?)
        } else {
            None
        };
        Ok(Pipeline {
            cfg: cfg.clone(),
            fs,
            lna: gain_from_code(cfg.lna_gain),
            pga: gain_from_code(cfg.pga_gain),
            hpf,
            bq1: Biquad::new(coeffs),
            bq2: Biquad::new(coeffs),
            noise,
            noise_seed,
        })
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.cfg
    }

    /// Realized discrete-time chain response at `f` (designed sections plus
    /// gains), the reference for input-referring measured output spectra.
    pub fn response_at(&self, f: f64) -> Complex64 {
        let h = self.hpf.response_at(f)
            * self.bq1.coeffs.response_at(f)
            * self.bq2.coeffs.response_at(f);
        h * self.lna * self.pga
    }

    /// Returns all delay lines to zero and rewinds the noise stream.
    pub fn reset(&mut self) {
        self.hpf.reset();
        self.bq1.reset();
        self.bq2.reset();
        if let Some(n) = &mut self.noise {
            *n = NoiseGenerator::new(&self.cfg.noise, self.fs, self.noise_seed)
                .expect("noise model was valid at construction");
        }
    }

    /// Processes one block through the chain. Blocks may be split anywhere;
    /// state carries over, so concatenated blocks equal one big block.
    pub fn process_block(&mut self, x: &SampledSignal) -> Result<SampledSignal> {
        x.validate()?;
        if (x.fs - self.fs).abs() > 1e-9 * self.fs {
            return Err(Error::Signal(format!(
                "block rate {} Hz does not match pipeline rate {} Hz",
                x.fs, self.fs
            )));
        }
        let mut out = Vec::with_capacity(x.len());
        for &s in &x.samples {
            let mut v = s;
            if let Some(n) = &mut self.noise {
                v += n.next_sample();
            }
            v *= self.lna;
            v = self.hpf.step(v);
            v = self.bq1.step(v);
            v = self.bq2.step(v);
            v *= self.pga;
            if let Some(sat) = self.cfg.v_sat {
                v = v.clamp(-sat, sat);
            }
            out.push(v);
        }
        SampledSignal::new(self.fs, x.t0, out)
    }
}
