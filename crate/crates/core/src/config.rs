//! Channel configuration: DAC code mappings, per-stage parameter structs and
//! validation.

use sha2::{Digest, Sha256};

/// Number of channels in the array.
pub const NUM_CHANNELS: usize = 16;

/// Highest valid gain DAC code.
pub const MAX_GAIN_CODE: u8 = 15;

/// Converts a 4-bit gain DAC code to gain in dB.
///
/// The ladder spans 0..24 dB in 16 uniform steps: `dB = 24 * code / 15`.
pub fn gain_db_from_code(code: u8) -> f64 {
    24.0 * code as f64 / 15.0
}

/// Converts a 4-bit gain DAC code to linear gain.
pub fn gain_from_code(code: u8) -> f64 {
    10f64.powf(gain_db_from_code(code) / 20.0)
}

/// Converts an 8-bit capacitor DAC code to capacitance in farads.
///
/// The trim array is a unit-capacitor ladder: `C = c_base * (code + 1) / 256`,
/// so code 255 selects the full `c_base` and code 0 the smallest slice.
pub fn cap_from_code(code: u8, c_base: f64) -> f64 {
    c_base * (code as f64 + 1.0) / 256.0
}

/// Band-pass filter bias settings for one channel.
///
/// The filter is two identical gm-C biquads in cascade; `gm1`/`gm2` are the
/// transconductances in siemens and the capacitor DAC codes select slices of
/// the base capacitance `c_base` (farads).
#[derive(Debug, Clone, PartialEq)]
pub struct BpfConfig {
    pub gm1: f64,
    pub gm2: f64,
    pub c1_code: u8,
    pub c2_code: u8,
    pub c_base: f64,
}

impl Default for BpfConfig {
    fn default() -> Self {
        // Centered at 1 kHz with Q = 1 for C1 = C2 = 10 pF:
        // gm = 2*pi*1000*10e-12 = 6.2832e-8 S.
        BpfConfig {
            gm1: 6.283_185_307_179_586e-8,
            gm2: 6.283_185_307_179_586e-8,
            c1_code: 255,
            c2_code: 255,
            c_base: 10e-12,
        }
    }
}

impl BpfConfig {
    pub fn c1(&self) -> f64 {
        cap_from_code(self.c1_code, self.c_base)
    }

    pub fn c2(&self) -> f64 {
        cap_from_code(self.c2_code, self.c_base)
    }
}

/// Asynchronous delta modulator settings.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmConfig {
    /// UP threshold step in volts.
    pub delta_up: f64,
    /// DN threshold step in volts.
    pub delta_dn: f64,
    /// Re-arm hysteresis in volts; must stay below both thresholds.
    pub hysteresis: f64,
    /// Initial reference level in volts.
    pub v_ref_init: f64,
    /// Std-dev of per-instance threshold mismatch in volts (0 disables).
    pub threshold_sigma: f64,
}

impl Default for AdmConfig {
    fn default() -> Self {
        AdmConfig {
            delta_up: 10e-3,
            delta_dn: 10e-3,
            hysteresis: 1e-3,
            v_ref_init: 0.0,
            threshold_sigma: 0.0,
        }
    }
}

/// Pulse-frequency modulator (rectifier + transconductor + LIF) settings.
#[derive(Debug, Clone, PartialEq)]
pub struct PfmConfig {
    /// Rectifier transconductance in siemens (current = gm * max(v, 0)).
    pub gm_amp: f64,
    /// Membrane capacitance in farads.
    pub c_mem: f64,
    /// Firing threshold in volts.
    pub v_th: f64,
    /// Post-spike reset level in volts.
    pub v_reset: f64,
    /// Constant leak current in amperes.
    pub i_leak: f64,
    /// Refractory period in seconds.
    pub t_refr: f64,
}

impl Default for PfmConfig {
    fn default() -> Self {
        PfmConfig {
            gm_amp: 1e-6,
            c_mem: 100e-12,
            v_th: 0.3,
            v_reset: 0.0,
            i_leak: 1e-9,
            t_refr: 10e-6,
        }
    }
}

/// Input-referred noise model for one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub enabled: bool,
    /// White noise density in V/sqrt(Hz).
    pub white_density: f64,
    /// 1/f corner frequency in Hz (0 disables the flicker component).
    pub flicker_corner_hz: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        // Densities sized so the default band integrates to 1.4 uVrms over
        // 1 Hz..1 kHz with a 1 kHz corner; disabled until switched on.
        NoiseModel {
            enabled: false,
            white_density: NoiseModel::density_for_rms(1.4e-6, 1.0, 1000.0, 1000.0),
            flicker_corner_hz: 1000.0,
        }
    }
}

impl NoiseModel {
    /// White density that integrates to `rms` over `f_lo..f_hi` given a 1/f
    /// corner at `corner_hz`.
    ///
    /// The model PSD is `d^2 * (1 + corner/f)`, so the band power is
    /// `d^2 * ((f_hi - f_lo) + corner * ln(f_hi/f_lo))` and `d` follows by
    /// inversion.
    pub fn density_for_rms(rms: f64, f_lo: f64, f_hi: f64, corner_hz: f64) -> f64 {
        let band = (f_hi - f_lo) + corner_hz * (f_hi / f_lo).ln();
        rms / band.sqrt()
    }

    /// Builds an enabled model calibrated to `rms` volts over `f_lo..f_hi`.
    pub fn for_rms_in_band(rms: f64, f_lo: f64, f_hi: f64, corner_hz: f64) -> NoiseModel {
        NoiseModel {
            enabled: true,
            white_density: NoiseModel::density_for_rms(rms, f_lo, f_hi, corner_hz),
            flicker_corner_hz: corner_hz,
        }
    }

    /// Model PSD in V^2/Hz at frequency `f`.
    pub fn psd_at(&self, f: f64) -> f64 {
        let d2 = self.white_density * self.white_density;
        if self.flicker_corner_hz > 0.0 {
            d2 * (1.0 + self.flicker_corner_hz / f)
        } else {
            d2
        }
    }
}

/// Which encoder a channel drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderMode {
    Adm,
    Pfm,
}

impl EncoderMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            EncoderMode::Adm => "adm",
            EncoderMode::Pfm => "pfm",
        }
    }
}

/// Full configuration of one recording channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    /// Channel index, 0..=15.
    pub channel: u8,
    /// LNA gain DAC code, 0..=15.
    pub lna_gain: u8,
    /// PGA gain DAC code, 0..=15.
    pub pga_gain: u8,
    /// DC servo loop high-pass corner in Hz.
    pub dsl_cutoff_hz: f64,
    /// Optional hard output saturation level in volts (symmetric).
    pub v_sat: Option<f64>,
    pub bpf: BpfConfig,
    pub mode: EncoderMode,
    pub adm: AdmConfig,
    pub pfm: PfmConfig,
    pub noise: NoiseModel,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            channel: 0,
            lna_gain: 0,
            pga_gain: 0,
            dsl_cutoff_hz: 1.0,
            v_sat: None,
            bpf: BpfConfig::default(),
            mode: EncoderMode::Adm,
            adm: AdmConfig::default(),
            pfm: PfmConfig::default(),
            noise: NoiseModel::default(),
        }
    }
}

impl ChannelConfig {
    /// True if simulating this channel draws random numbers, in which case a
    /// seed must be supplied explicitly.
    pub fn is_stochastic(&self) -> bool {
        self.noise.enabled || (self.mode == EncoderMode::Adm && self.adm.threshold_sigma > 0.0)
    }
}

/// One violated invariant, with a dotted path to the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn push(out: &mut Vec<Violation>, path: &str, message: impl Into<String>) {
    out.push(Violation {
        path: path.to_string(),
        message: message.into(),
    });
}

fn check_positive(out: &mut Vec<Violation>, path: &str, v: f64) {
    if !(v.is_finite() && v > 0.0) {
        push(out, path, format!("must be positive and finite, got {v}"));
    }
}

fn check_non_negative(out: &mut Vec<Violation>, path: &str, v: f64) {
    if !(v.is_finite() && v >= 0.0) {
        push(out, path, format!("must be non-negative and finite, got {v}"));
    }
}

/// Checks every invariant of a channel configuration and returns all
/// violations found; an empty list means the configuration is valid.
pub fn validate_config(cfg: &ChannelConfig) -> Vec<Violation> {
    let mut v = Vec::new();
    if cfg.channel as usize >= NUM_CHANNELS {
        push(&mut v, "channel", format!("must be 0..=15, got {}", cfg.channel));
    }
    if cfg.lna_gain > MAX_GAIN_CODE {
        push(&mut v, "lna_gain", format!("must be 0..=15, got {}", cfg.lna_gain));
    }
    if cfg.pga_gain > MAX_GAIN_CODE {
        push(&mut v, "pga_gain", format!("must be 0..=15, got {}", cfg.pga_gain));
    }
    check_positive(&mut v, "dsl_cutoff_hz", cfg.dsl_cutoff_hz);
    if let Some(vs) = cfg.v_sat {
        check_positive(&mut v, "v_sat", vs);
    }

    check_positive(&mut v, "bpf.gm1", cfg.bpf.gm1);
    check_positive(&mut v, "bpf.gm2", cfg.bpf.gm2);
    check_positive(&mut v, "bpf.c_base", cfg.bpf.c_base);

    check_positive(&mut v, "adm.delta_up", cfg.adm.delta_up);
    check_positive(&mut v, "adm.delta_dn", cfg.adm.delta_dn);
    check_non_negative(&mut v, "adm.hysteresis", cfg.adm.hysteresis);
    if cfg.adm.hysteresis.is_finite()
        && cfg.adm.delta_up > 0.0
        && cfg.adm.delta_dn > 0.0
        && cfg.adm.hysteresis >= cfg.adm.delta_up.min(cfg.adm.delta_dn)
    {
        push(
            &mut v,
            "adm.hysteresis",
            format!(
                "must be smaller than both thresholds, got {} vs min delta {}",
                cfg.adm.hysteresis,
                cfg.adm.delta_up.min(cfg.adm.delta_dn)
            ),
        );
    }
    if !cfg.adm.v_ref_init.is_finite() {
        push(&mut v, "adm.v_ref_init", "must be finite");
    }
    check_non_negative(&mut v, "adm.threshold_sigma", cfg.adm.threshold_sigma);

    check_positive(&mut v, "pfm.gm_amp", cfg.pfm.gm_amp);
    check_positive(&mut v, "pfm.c_mem", cfg.pfm.c_mem);
    if !(cfg.pfm.v_th.is_finite() && cfg.pfm.v_reset.is_finite() && cfg.pfm.v_th > cfg.pfm.v_reset)
    {
        push(
            &mut v,
            "pfm.v_th",
            format!(
                "threshold must exceed reset, got v_th {} vs v_reset {}",
                cfg.pfm.v_th, cfg.pfm.v_reset
            ),
        );
    }
    check_non_negative(&mut v, "pfm.v_reset", cfg.pfm.v_reset);
    check_non_negative(&mut v, "pfm.i_leak", cfg.pfm.i_leak);
    check_non_negative(&mut v, "pfm.t_refr", cfg.pfm.t_refr);

    if cfg.noise.enabled {
        check_positive(&mut v, "noise.white_density", cfg.noise.white_density);
    } else {
        check_non_negative(&mut v, "noise.white_density", cfg.noise.white_density);
    }
    check_non_negative(&mut v, "noise.flicker_corner_hz", cfg.noise.flicker_corner_hz);
    v
}

/// Validates a set of channels: every per-channel invariant plus uniqueness
/// of channel indices. Paths are prefixed `channel.<n>.`.
pub fn validate_config_set(cfgs: &[ChannelConfig]) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = [false; NUM_CHANNELS];
    for cfg in cfgs {
        let prefix = format!("channel.{}", cfg.channel);
        for v in validate_config(cfg) {
            out.push(Violation {
                path: format!("{prefix}.{}", v.path),
                message: v.message,
            });
        }
        if (cfg.channel as usize) < NUM_CHANNELS {
            if seen[cfg.channel as usize] {
                out.push(Violation {
                    path: prefix,
                    message: "duplicate channel index".into(),
                });
            }
            seen[cfg.channel as usize] = true;
        }
    }
    out
}

/// Canonical text form of a configuration set, used for report digests.
///
/// Field order is fixed and floats use the shortest round-trip formatting,
/// so equal configurations always produce identical text.
pub fn canonical_string(cfgs: &[ChannelConfig]) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let mut sorted: Vec<&ChannelConfig> = cfgs.iter().collect();
    sorted.sort_by_key(|c| c.channel);
    for c in sorted {
        let _ = write!(
            s,
            "channel={} lna_gain={} pga_gain={} dsl_cutoff_hz={} v_sat={:?} \
             bpf.gm1={} bpf.gm2={} bpf.c1_code={} bpf.c2_code={} bpf.c_base={} \
             mode={} adm.delta_up={} adm.delta_dn={} adm.hysteresis={} \
             adm.v_ref_init={} adm.threshold_sigma={} pfm.gm_amp={} pfm.c_mem={} \
             pfm.v_th={} pfm.v_reset={} pfm.i_leak={} pfm.t_refr={} \
             noise.enabled={} noise.white_density={} noise.flicker_corner_hz={}\n",
            c.channel,
            c.lna_gain,
            c.pga_gain,
            c.dsl_cutoff_hz,
            c.v_sat,
            c.bpf.gm1,
            c.bpf.gm2,
            c.bpf.c1_code,
            c.bpf.c2_code,
            c.bpf.c_base,
            c.mode.as_str(),
            c.adm.delta_up,
            c.adm.delta_dn,
            c.adm.hysteresis,
            c.adm.v_ref_init,
            c.adm.threshold_sigma,
            c.pfm.gm_amp,
            c.pfm.c_mem,
            c.pfm.v_th,
            c.pfm.v_reset,
            c.pfm.i_leak,
            c.pfm.t_refr,
            c.noise.enabled,
            c.noise.white_density,
            c.noise.flicker_corner_hz,
        );
    }
    s
}

/// SHA-256 digest (hex) of the canonical form of a configuration set.
pub fn config_digest(cfgs: &[ChannelConfig]) -> String {
    let mut h = Sha256::new();
    h.update(canonical_string(cfgs).as_bytes());
    let out = h.finalize();
    let mut s = String::with_capacity(64);
    for b in out {
        use std::fmt::Write;
        let _ = write!(s, "{b:02x}");
    }
    s
}
