//! Measurement harness: frequency sweeps, filter-bank characterization,
//! PSD/SNDR reports and encoder rate curves.

use num_complex::Complex64;

use crate::config::{config_digest, validate_config, ChannelConfig, PfmConfig};
use crate::pfm::{lif_isi, PfmEncoder};
use crate::pipeline::{bpf_for, bpf_params, settle_time, Pipeline};
use crate::signal::{dc, sine, SampledSignal};
use crate::spectrum::{sndr_in_band, welch_psd};
use crate::{Error, Result};

/// What a report holds; fixes the axis conventions for CSV output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportKind {
    /// x = frequency in Hz, y = gain in dB.
    Sweep,
    /// x = frequency in Hz, y = PSD in V^2/Hz.
    Psd,
    /// x = input amplitude in dBV, y = SNDR in dB.
    SndrCurve,
    /// x = input amplitude in V, y = event rate in Hz.
    RateCurve,
}

impl ReportKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReportKind::Sweep => "sweep",
            ReportKind::Psd => "psd",
            ReportKind::SndrCurve => "sndr",
            ReportKind::RateCurve => "rate",
        }
    }
}

/// A measured curve plus the provenance needed to reproduce it.
#[derive(Debug, Clone)]
pub struct MeasurementReport {
    pub kind: ReportKind,
    pub x_label: &'static str,
    pub y_label: &'static str,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub seed: Option<u64>,
    pub config_digest: Option<String>,
}

impl MeasurementReport {
    /// Builds a report, enforcing that x is strictly increasing and finite
    /// and that y is finite with matching length.
    pub fn new(
        kind: ReportKind,
        x_label: &'static str,
        y_label: &'static str,
        x: Vec<f64>,
        y: Vec<f64>,
    ) -> Result<MeasurementReport> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::Measure(format!(
                "axis lengths must match and be non-empty, got {} vs {}",
                x.len(),
                y.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Measure("report values must be finite".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Measure("x axis must be strictly increasing".into()));
        }
        Ok(MeasurementReport {
            kind,
            x_label,
            y_label,
            x,
            y,
            seed: None,
            config_digest: None,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_config(mut self, cfgs: &[ChannelConfig]) -> Self {
        self.config_digest = Some(config_digest(cfgs));
        self
    }
}

/// Least-squares line fit over (x, y) points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fits `y = slope*x + intercept`; `None` with fewer than two points or a
/// degenerate x spread.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let ss_tot: f64 = y.iter().map(|v| (v - mean_y).powi(2)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - (slope * a + intercept)).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res < 1e-300 {
        1.0
    } else {
        0.0
    };
    Some(LineFit { slope, intercept, r_squared })
}

/// Single-bin Fourier projection of `y[start..start+len]` onto `f`,
/// returning the complex amplitude of the tone (|result| is its peak value).
fn project_tone(y: &[f64], fs: f64, f: f64, start: usize, len: usize) -> Complex64 {
    let w = 2.0 * std::f64::consts::PI * f;
    let mut acc = Complex64::new(0.0, 0.0);
    for n in start..start + len {
        let t = n as f64 / fs;
        let (s, c) = (w * t).sin_cos();
        acc += y[n] * Complex64::new(c, -s);
    }
    acc * (2.0 / len as f64)
}

fn validated(cfg: &ChannelConfig) -> Result<()> {
    if let Some(v) = validate_config(cfg).first() {
        return Err(Error::config(v.path.clone(), v.message.clone()));
    }
    Ok(())
}

/// Sample rate for sweeping `cfg` across `freqs`: comfortably oversampled
/// around the filter center and the highest probe tone.
fn sweep_rate(cfg: &ChannelConfig, f_max: f64) -> f64 {
    let (f0, _) = bpf_params(&cfg.bpf);
    (32.0 * f0).max(4.0 * f_max).max(48_000.0)
}

/// Measures the small-signal gain of a channel at each probe frequency by
/// driving a settled sine and projecting the steady-state response.
///
/// Returns a [`ReportKind::Sweep`] report with gain in dB.
pub fn frequency_sweep(
    cfg: &ChannelConfig,
    freqs: &[f64],
    amplitude: f64,
    seed: u64,
) -> Result<MeasurementReport> {
    validated(cfg)?;
    if freqs.is_empty() {
        return Err(Error::Measure("sweep needs at least one frequency".into()));
    }
    if freqs.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
        return Err(Error::Measure("sweep frequencies must be positive".into()));
    }
    if freqs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Measure("sweep frequencies must be strictly increasing".into()));
    }
    if !(amplitude.is_finite() && amplitude > 0.0) {
        return Err(Error::Measure(format!("probe amplitude must be positive, got {amplitude}")));
    }

    let f_max = *freqs.last().expect("non-empty");
    let fs = sweep_rate(cfg, f_max);
    let mut pipe = Pipeline::new(cfg, fs, seed)?;
    let settle = (settle_time(cfg) * fs).ceil() as usize;

    let mut gains_db = Vec::with_capacity(freqs.len());
    for &f in freqs {
        // Measure over whole periods: at least 32, and at least ~1024 samples.
        let periods = 32.0f64.max((1024.0 * f / fs).ceil());
        let n_win = (periods * fs / f).round() as usize;
        let x = sine(fs, f, amplitude, 0.0, settle + n_win)?;
        let y = pipe.process_block(&x)?;
        let amp_out = project_tone(&y.samples, fs, f, settle, n_win).norm();
        gains_db.push(20.0 * (amp_out / amplitude).log10());
        pipe.reset();
    }
    MeasurementReport::new(ReportKind::Sweep, "f_hz", "gain_db", freqs.to_vec(), gains_db)
        .map(|r| r.with_config(std::slice::from_ref(cfg)))
}

/// Peak and bandwidth figures extracted from a sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepAnalysis {
    /// Interpolated peak frequency in Hz.
    pub f_peak: f64,
    /// Interpolated peak gain in dB.
    pub peak_db: f64,
    /// Lower/upper -3 dB frequencies of the overall response.
    pub f_lo: f64,
    pub f_hi: f64,
    /// Section quality factor inferred from the -3 dB width of the
    /// two-section cascade: `q = sqrt(sqrt(2)-1) * f_peak / (f_hi - f_lo)`.
    pub q: f64,
}

/// Locates the peak (parabolic interpolation on a log-frequency axis) and
/// the -3 dB crossings (linear interpolation) of a sweep.
pub fn analyze_sweep(freqs: &[f64], gains_db: &[f64]) -> Result<SweepAnalysis> {
    if freqs.len() != gains_db.len() || freqs.len() < 5 {
        return Err(Error::Measure("sweep analysis needs at least five points".into()));
    }
    let k = gains_db
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite gains"))
        .map(|(i, _)| i)
        .expect("non-empty");
    if k == 0 || k == freqs.len() - 1 {
        return Err(Error::Measure("sweep peak lies at the edge; widen the span".into()));
    }

    let u = |i: usize| freqs[i].ln();
    // Parabola through the three points around the maximum.
    let (u0, u1, u2) = (u(k - 1), u(k), u(k + 1));
    let (y0, y1, y2) = (gains_db[k - 1], gains_db[k], gains_db[k + 1]);
    let d1 = (y1 - y0) / (u1 - u0);
    let d2 = (y2 - y1) / (u2 - u1);
    let curv = (d2 - d1) / (u2 - u0);
    let u_peak = if curv < 0.0 {
        let v = 0.5 * (u0 + u1) - d1 / (2.0 * curv);
        v.clamp(u0, u2)
    } else {
        u1
    };
    // Newton's divided-difference form of the parabola, evaluated at u_peak.
    let peak_db = y0 + d1 * (u_peak - u0) + curv * (u_peak - u0) * (u_peak - u1);

    let target = peak_db - 10.0 * 2f64.log10();
    let cross = |i0: usize, i1: usize| {
        // Linear interpolation in (ln f, dB) between samples i0 and i1.
        let t = (target - gains_db[i0]) / (gains_db[i1] - gains_db[i0]);
        (u(i0) + t * (u(i1) - u(i0))).exp()
    };
    let mut f_hi = None;
    for i in k..freqs.len() - 1 {
        if gains_db[i + 1] < target {
            f_hi = Some(cross(i, i + 1));
            break;
        }
    }
    let mut f_lo = None;
    for i in (1..=k).rev() {
        if gains_db[i - 1] < target {
            f_lo = Some(cross(i, i - 1));
            break;
        }
    }
    let (f_lo, f_hi) = match (f_lo, f_hi) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::Measure(
                "sweep does not cover both -3 dB crossings; widen the span".into(),
            ))
        }
    };
    let f_peak = u_peak.exp();
    let q = (std::f64::consts::SQRT_2 - 1.0).sqrt() * f_peak / (f_hi - f_lo);
    Ok(SweepAnalysis { f_peak, peak_db, f_lo, f_hi, q })
}

/// Builds an octave-spaced filter bank: channel `k` is centered at
/// `f_lo * 2^k` with the given per-section quality factor.
pub fn octave_bank(f_lo: f64, channels: usize, q: f64) -> Result<Vec<ChannelConfig>> {
    if channels == 0 || channels > 16 {
        return Err(Error::Measure(format!("bank size must be 1..=16, got {channels}")));
    }
    if !(f_lo.is_finite() && f_lo > 0.0) {
        return Err(Error::Measure(format!("bank base frequency must be positive, got {f_lo}")));
    }
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::Measure(format!("bank quality factor must be positive, got {q}")));
    }
    let mut out = Vec::with_capacity(channels);
    for k in 0..channels {
        let mut cfg = ChannelConfig::default();
        cfg.channel = k as u8;
        cfg.bpf = bpf_for(f_lo * (1u64 << k) as f64, q, 10e-12);
        out.push(cfg);
    }
    Ok(out)
}

/// Welch PSD of a record as a [`ReportKind::Psd`] report.
pub fn psd_report(x: &SampledSignal, seg_len: usize, overlap: f64) -> Result<MeasurementReport> {
    let p = welch_psd(x, seg_len, overlap)?;
    MeasurementReport::new(ReportKind::Psd, "f_hz", "psd_v2_per_hz", p.freqs, p.psd)
}

/// How [`rate_vs_amplitude`] drives the encoder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateDrive {
    /// Constant level; the rate of each point is 1/(mean ISI).
    Dc,
    /// Sine at the given frequency; the rate is events per second.
    Tone(f64),
}

/// Measures PFM output rate against drive amplitude, feeding the encoder
/// directly (the rate curve characterizes the encoder itself, so the level
/// reaching it is the independent variable). Returns the curve and, when at
/// least two points spike, a least-squares line fit over the spiking points.
pub fn rate_vs_amplitude(
    pfm: &PfmConfig,
    amplitudes: &[f64],
    drive: RateDrive,
) -> Result<(MeasurementReport, Option<LineFit>)> {
    if amplitudes.is_empty() {
        return Err(Error::Measure("rate curve needs at least one amplitude".into()));
    }
    if amplitudes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(Error::Measure("amplitudes must be positive".into()));
    }
    if amplitudes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Measure("amplitudes must be strictly increasing".into()));
    }
    if let RateDrive::Tone(f) = drive {
        if !(f.is_finite() && f > 0.0) {
            return Err(Error::Measure(format!("tone frequency must be positive, got {f}")));
        }
    }

    let a_max = *amplitudes.last().expect("non-empty");
    let a_min = amplitudes[0];
    // Resolve the shortest expected interval with ~200 samples, and make the
    // nanosecond grid exact by keeping fs a multiple of 1 MHz.
    let isi_min = lif_isi(pfm.gm_amp * a_max, pfm).unwrap_or(1e-3);
    let mut fs = (200.0 / isi_min / 1e6).ceil().max(1.0) * 1e6;
    if let RateDrive::Tone(f) = drive {
        fs = fs.max((200.0 * f / 1e6).ceil() * 1e6);
    }

    // Capture enough of the slowest spiking point for a stable estimate.
    let isi_max = lif_isi(pfm.gm_amp * a_min, pfm)
        .or_else(|| lif_isi(pfm.gm_amp * a_max, pfm))
        .unwrap_or(1e-3);
    let mut duration = (60.0 * isi_max).clamp(0.2, 10.0);
    if let RateDrive::Tone(f) = drive {
        // Whole stimulus cycles.
        duration = duration.max(0.5);
        duration = (duration * f).ceil() / f;
    }
    let n = (duration * fs).round() as usize;

    let mut rates = Vec::with_capacity(amplitudes.len());
    for &a in amplitudes {
        let x = match drive {
            RateDrive::Dc => dc(fs, a, n)?,
            RateDrive::Tone(f) => sine(fs, f, a, 0.0, n)?,
        };
        let mut enc = PfmEncoder::new(pfm, 0)?;
        let (events, _) = enc.encode_block(&x)?;
        let rate = match drive {
            RateDrive::Dc => {
                if events.len() < 2 {
                    0.0
                } else {
                    let span = (events.last().expect("len>=2").t_ns
                        - events.first().expect("len>=2").t_ns)
                        as f64
                        * 1e-9;
                    (events.len() - 1) as f64 / span
                }
            }
            RateDrive::Tone(_) => events.len() as f64 / duration,
        };
        rates.push(rate);
    }

    let spiking: (Vec<f64>, Vec<f64>) = amplitudes
        .iter()
        .zip(&rates)
        .filter(|(_, r)| **r > 0.0)
        .map(|(a, r)| (*a, *r))
        .unzip();
    let fit = if spiking.0.len() >= 2 {
        fit_line(&spiking.0, &spiking.1)
    } else {
        None
    };
    let report = MeasurementReport::new(
        ReportKind::RateCurve,
        "amplitude_v",
        "rate_hz",
        amplitudes.to_vec(),
        rates,
    )?;
    Ok((report, fit))
}

/// SNDR of the full chain versus input amplitude at a fixed test tone.
///
/// Each point drives a settled sine through a fresh pipeline under the same
/// master seed and measures SNDR over the default band. x is amplitude in
/// dBV.
pub fn sndr_vs_amplitude(
    cfg: &ChannelConfig,
    f0: f64,
    amplitudes_v: &[f64],
    seed: u64,
) -> Result<MeasurementReport> {
    validated(cfg)?;
    if amplitudes_v.is_empty() {
        return Err(Error::Measure("SNDR curve needs at least one amplitude".into()));
    }
    if amplitudes_v
        .windows(2)
        .any(|w| w[1] <= w[0] || !(w[0] > 0.0))
        || !(amplitudes_v[0] > 0.0)
    {
        return Err(Error::Measure("amplitudes must be positive and strictly increasing".into()));
    }
    let fs = sweep_rate(cfg, f0);
    // A gain measurement tolerates a -67 dBc start-up residue; an SNDR
    // measurement does not. Triple the band-pass settle and wait out the
    // servo pole (eight time constants) so the chain's own transient stays
    // well below any configured noise floor.
    let settle = ((3.0 * settle_time(cfg) + 1.5 / cfg.dsl_cutoff_hz) * fs).ceil() as usize;
    let periods = 64.0f64.max((32_768.0 * f0 / fs).ceil());
    let n_meas = (periods * fs / f0).round() as usize;

    let mut out = Vec::with_capacity(amplitudes_v.len());
    for &a in amplitudes_v {
        let x = sine(fs, f0, a, 0.0, settle + n_meas)?;
        let mut pipe = Pipeline::new(cfg, fs, seed)?;
        let y = pipe.process_block(&x)?;
        let tail = SampledSignal::from_samples(fs, y.samples[settle..].to_vec())?;
        out.push(sndr_in_band(&tail, f0, 10.0, fs / 2.0)?);
    }
    let x_dbv: Vec<f64> = amplitudes_v.iter().map(|a| 20.0 * a.log10()).collect();
    MeasurementReport::new(ReportKind::SndrCurve, "amp_dbv", "sndr_db", x_dbv, out)
        .map(|r| r.with_seed(seed).with_config(std::slice::from_ref(cfg)))
}

/// Output-referred dynamic range implied by the configuration: the ratio of
/// the largest undistorted sine power (`v_sat^2/2`) to the output-band noise
/// power, integrated from the noise model through the realized chain
/// response over `[f_lo, f_hi]`.
///
/// `None` when the channel has no saturation level or no enabled noise —
/// there is no finite dynamic range to speak of.
pub fn configured_dynamic_range(
    cfg: &ChannelConfig,
    fs: f64,
    f_lo: f64,
    f_hi: f64,
) -> Result<Option<f64>> {
    validated(cfg)?;
    let Some(v_sat) = cfg.v_sat else { return Ok(None) };
    if !cfg.noise.enabled {
        return Ok(None);
    }
    if !(f_lo > 0.0 && f_hi > f_lo && f_hi <= fs / 2.0) {
        return Err(Error::Measure(format!("bad integration band {f_lo}..{f_hi}")));
    }
    let pipe = Pipeline::new(cfg, fs, 0)?;
    let steps = 20_000usize;
    let df = (f_hi - f_lo) / steps as f64;
    let mut power = 0.0;
    for i in 0..steps {
        let f = f_lo + (i as f64 + 0.5) * df;
        power += cfg.noise.psd_at(f) * pipe.response_at(f).norm_sqr() * df;
    }
    Ok(Some(10.0 * ((v_sat * v_sat / 2.0) / power).log10()))
}
