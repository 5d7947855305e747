//! Browser bindings for three interactive views of the front-end models: the
//! band-pass response, the ADM staircase and the PFM integrator.
//!
//! Every export takes plain numbers and returns a JSON string, so the page
//! needs no generated glue types and the same functions test natively. Bad
//! inputs come back as `{"error":"..."}` rather than exceptions.

use std::fmt::Write;

use wasm_bindgen::prelude::wasm_bindgen;

use afe_sim::adm::AdmEncoder;
use afe_sim::config::{AdmConfig, ChannelConfig, PfmConfig};
use afe_sim::decode::adm_reconstruct;
use afe_sim::pfm::{lif_isi, PfmEncoder};
use afe_sim::pipeline::{bpf_for, choose_sim_rate, Pipeline};
use afe_sim::signal::{dc, sine};

/// Cap on returned curve lengths; plots get no sharper than a screen.
const MAX_PLOT_POINTS: usize = 1600;

fn json_error(msg: &str) -> String {
    format!(
        "{{\"error\":\"{}\"}}",
        msg.replace('\\', "\\\\").replace('"', "\\\"")
    )
}

fn write_array(out: &mut String, key: &str, values: &[f64]) {
    let _ = write!(out, "\"{key}\":[");
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v}");
    }
    out.push(']');
}

fn write_optional(out: &mut String, key: &str, value: Option<f64>) {
    match value {
        Some(v) => {
            let _ = write!(out, "\"{key}\":{v}");
        }
        None => {
            let _ = write!(out, "\"{key}\":null");
        }
    }
}

/// Plot-friendly decimation: every k-th sample so the result stays under
/// [`MAX_PLOT_POINTS`].
fn decimate(samples: &[f64], fs: f64) -> (Vec<f64>, Vec<f64>) {
    let step = samples.len().div_ceil(MAX_PLOT_POINTS).max(1);
    let mut t_ms = Vec::new();
    let mut v = Vec::new();
    for (i, s) in samples.iter().enumerate().step_by(step) {
        t_ms.push(i as f64 / fs * 1e3);
        v.push(*s);
    }
    (t_ms, v)
}

// --- band-pass response ---------------------------------------------------

struct ResponseView {
    fs_hz: f64,
    freqs_hz: Vec<f64>,
    gain_db: Vec<f64>,
}

fn response_view(f0_hz: f64, q: f64, points: usize) -> Result<ResponseView, String> {
    if !(f0_hz.is_finite() && (1.0..=200_000.0).contains(&f0_hz)) {
        return Err(format!("center frequency must be 1..200000 Hz, got {f0_hz}"));
    }
    if !(q.is_finite() && (0.25..=16.0).contains(&q)) {
        return Err(format!("quality factor must be 0.25..16, got {q}"));
    }
    if !(8..=1024).contains(&points) {
        return Err(format!("points must be 8..1024, got {points}"));
    }
    let mut cfg = ChannelConfig::default();
    cfg.bpf = bpf_for(f0_hz, q, 10e-12);
    let fs = choose_sim_rate(std::slice::from_ref(&cfg));
    let pipe = Pipeline::new(&cfg, fs, 0).map_err(|e| e.to_string())?;

    let (lo, hi) = (f0_hz / 8.0, 8.0 * f0_hz);
    let freqs_hz: Vec<f64> = (0..points)
        .map(|i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64))
        .collect();
    let gain_db = freqs_hz
        .iter()
        .map(|f| 20.0 * pipe.response_at(*f).norm().log10())
        .collect();
    Ok(ResponseView { fs_hz: fs, freqs_hz, gain_db })
}

/// Gain of a channel tuned to (`f0_hz`, `q`) over three octaves either side
/// of center.
#[wasm_bindgen]
pub fn filter_response(f0_hz: f64, q: f64, points: usize) -> String {
    let view = match response_view(f0_hz, q, points) {
        Ok(v) => v,
        Err(msg) => return json_error(&msg),
    };
    let mut out = String::from("{");
    let _ = write!(out, "\"f0_hz\":{f0_hz},\"q\":{q},\"fs_hz\":{},", view.fs_hz);
    write_array(&mut out, "freqs_hz", &view.freqs_hz);
    out.push(',');
    write_array(&mut out, "gain_db", &view.gain_db);
    out.push('}');
    out
}

// --- ADM staircase ----------------------------------------------------------

struct AdmView {
    t_ms: Vec<f64>,
    input_mv: Vec<f64>,
    level_mv: Vec<f64>,
    up_ms: Vec<f64>,
    dn_ms: Vec<f64>,
}

fn adm_view(
    f_hz: f64,
    amplitude_mv: f64,
    delta_mv: f64,
    hysteresis_mv: f64,
    duration_ms: f64,
) -> Result<AdmView, String> {
    if !(f_hz.is_finite() && (1.0..=2000.0).contains(&f_hz)) {
        return Err(format!("tone frequency must be 1..2000 Hz, got {f_hz}"));
    }
    if !(amplitude_mv.is_finite() && (1.0..=1000.0).contains(&amplitude_mv)) {
        return Err(format!("amplitude must be 1..1000 mV, got {amplitude_mv}"));
    }
    if !(delta_mv.is_finite() && (1.0..=100.0).contains(&delta_mv)) {
        return Err(format!("delta must be 1..100 mV, got {delta_mv}"));
    }
    if !(hysteresis_mv.is_finite() && hysteresis_mv > 0.0 && hysteresis_mv <= 0.9 * delta_mv) {
        return Err(format!(
            "hysteresis must be positive and at most 0.9*delta, got {hysteresis_mv} mV"
        ));
    }
    if !(duration_ms.is_finite() && (10.0..=1000.0).contains(&duration_ms)) {
        return Err(format!("duration must be 10..1000 ms, got {duration_ms}"));
    }

    let fs = 48_000.0;
    let n = (duration_ms / 1e3 * fs).round() as usize;
    let x = sine(fs, f_hz, amplitude_mv * 1e-3, 0.0, n).map_err(|e| e.to_string())?;
    let cfg = AdmConfig {
        delta_up: delta_mv * 1e-3,
        delta_dn: delta_mv * 1e-3,
        hysteresis: hysteresis_mv * 1e-3,
        v_ref_init: 0.0,
        threshold_sigma: 0.0,
    };
    let mut enc = AdmEncoder::new(&cfg, 0, 0).map_err(|e| e.to_string())?;
    let events = enc.encode_block(&x).map_err(|e| e.to_string())?;
    if events.len() > 50_000 {
        return Err(format!(
            "{} events is too dense to draw; raise delta or lower the amplitude",
            events.len()
        ));
    }
    let level = adm_reconstruct(
        &events,
        cfg.delta_up,
        cfg.delta_dn,
        0.0,
        fs,
        Some(duration_ms / 1e3),
        None,
    )
    .map_err(|e| e.to_string())?;

    let m = x.samples.len().min(level.samples.len());
    let (t_ms, input_mv) = decimate(&x.samples[..m], fs);
    let (_, level_mv) = decimate(&level.samples[..m], fs);
    let scale = |v: &f64| v * 1e3;
    Ok(AdmView {
        t_ms,
        input_mv: input_mv.iter().map(scale).collect(),
        level_mv: level_mv.iter().map(scale).collect(),
        up_ms: events
            .iter()
            .filter(|e| e.polarity == Some(afe_sim::event::Polarity::Up))
            .map(|e| e.t_ns as f64 * 1e-6)
            .collect(),
        dn_ms: events
            .iter()
            .filter(|e| e.polarity == Some(afe_sim::event::Polarity::Dn))
            .map(|e| e.t_ns as f64 * 1e-6)
            .collect(),
    })
}

/// Delta-modulates a sine and returns the tracked staircase plus both event
/// trains. All voltages in mV, times in ms.
#[wasm_bindgen]
pub fn adm_demo(
    f_hz: f64,
    amplitude_mv: f64,
    delta_mv: f64,
    hysteresis_mv: f64,
    duration_ms: f64,
) -> String {
    let view = match adm_view(f_hz, amplitude_mv, delta_mv, hysteresis_mv, duration_ms) {
        Ok(v) => v,
        Err(msg) => return json_error(&msg),
    };
    let mut out = String::from("{");
    write_array(&mut out, "t_ms", &view.t_ms);
    out.push(',');
    write_array(&mut out, "input_mv", &view.input_mv);
    out.push(',');
    write_array(&mut out, "level_mv", &view.level_mv);
    out.push(',');
    write_array(&mut out, "up_ms", &view.up_ms);
    out.push(',');
    write_array(&mut out, "dn_ms", &view.dn_ms);
    let _ = write!(out, ",\"event_count\":{}", view.up_ms.len() + view.dn_ms.len());
    out.push('}');
    out
}

// --- PFM integrator ---------------------------------------------------------

struct PfmView {
    t_ms: Vec<f64>,
    v_mem: Vec<f64>,
    v_th: f64,
    spikes_ms: Vec<f64>,
    rate_hz: Option<f64>,
    isi_pred_ms: Option<f64>,
}

fn pfm_view(level_mv: f64, duration_ms: f64) -> Result<PfmView, String> {
    if !(level_mv.is_finite() && (1.0..=500.0).contains(&level_mv)) {
        return Err(format!("drive level must be 1..500 mV, got {level_mv}"));
    }
    if !(duration_ms.is_finite() && (1.0..=200.0).contains(&duration_ms)) {
        return Err(format!("duration must be 1..200 ms, got {duration_ms}"));
    }
    let cfg = PfmConfig::default();
    let fs = 2e6;
    let n = (duration_ms / 1e3 * fs).round() as usize;
    let mut enc = PfmEncoder::new(&cfg, 0).map_err(|e| e.to_string())?;
    let (events, membrane) = enc
        .encode_block(&dc(fs, level_mv * 1e-3, n).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;

    let rate_hz = (events.len() >= 2).then(|| {
        let span = (events.last().unwrap().t_ns - events[0].t_ns) as f64 * 1e-9;
        (events.len() - 1) as f64 / span
    });
    let (t_ms, v_mem) = decimate(&membrane.samples, fs);
    Ok(PfmView {
        t_ms,
        v_mem,
        v_th: cfg.v_th,
        spikes_ms: events.iter().map(|e| e.t_ns as f64 * 1e-6).collect(),
        rate_hz,
        isi_pred_ms: lif_isi(cfg.gm_amp * level_mv * 1e-3, &cfg).map(|isi| isi * 1e3),
    })
}

/// Integrate-and-fire response to a DC drive level (mV): membrane trace,
/// spike times and the measured versus predicted rate.
#[wasm_bindgen]
pub fn pfm_demo(level_mv: f64, duration_ms: f64) -> String {
    let view = match pfm_view(level_mv, duration_ms) {
        Ok(v) => v,
        Err(msg) => return json_error(&msg),
    };
    let mut out = String::from("{");
    write_array(&mut out, "t_ms", &view.t_ms);
    out.push(',');
    write_array(&mut out, "v_mem", &view.v_mem);
    let _ = write!(out, ",\"v_th\":{},", view.v_th);
    write_array(&mut out, "spikes_ms", &view.spikes_ms);
    out.push(',');
    write_optional(&mut out, "rate_hz", view.rate_hz);
    out.push(',');
    write_optional(&mut out, "isi_pred_ms", view.isi_pred_ms);
    out.push('}');
    out
}
