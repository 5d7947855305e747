//! Receiver-side reconstruction from event streams.

use crate::adm::staircase_level;
use crate::event::{check_time_ordered, Event, EventSource, Polarity};
use crate::signal::SampledSignal;
use crate::{Error, Result};

fn output_length(fs_out: f64, duration_s: Option<f64>, last_event_s: Option<f64>) -> Result<usize> {
    if !(fs_out.is_finite() && fs_out > 0.0) {
        return Err(Error::Decode(format!("output rate must be positive, got {fs_out}")));
    }
    let duration = match (duration_s, last_event_s) {
        (Some(d), _) => {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::Decode(format!("duration must be positive, got {d}")));
            }
            d
        }
        (None, Some(last)) => last + 1.0 / fs_out,
        (None, None) => {
            return Err(Error::Decode(
                "empty event stream needs an explicit duration".into(),
            ))
        }
    };
    Ok(((duration * fs_out).ceil() as usize).max(1))
}

fn check_stream(events: &[Event], want: EventSource) -> Result<()> {
    check_time_ordered(events).map_err(|e| Error::Decode(e.to_string()))?;
    for e in events {
        e.validate().map_err(|e| Error::Decode(e.to_string()))?;
        if e.source != want {
            return Err(Error::Decode(format!(
                "stream mixes sources: expected {want} events only"
            )));
        }
        if events[0].channel != e.channel {
            return Err(Error::Decode(
                "stream mixes channels; reconstruct one channel at a time".into(),
            ));
        }
    }
    Ok(())
}

/// Rebuilds the staircase tracked by an ADM encoder.
///
/// `delta_up`/`delta_dn`/`v0` must match the encoder's realized parameters;
/// the level after `k` events is computed with [`staircase_level`], so at
/// event times the output equals the encoder's reference bit-for-bit. The
/// output grid starts at t = 0 with rate `fs_out`; `duration_s` defaults to
/// one sample past the last event. `smooth_corner_hz` optionally applies a
/// one-pole low-pass to soften the steps.
pub fn adm_reconstruct(
    events: &[Event],
    delta_up: f64,
    delta_dn: f64,
    v0: f64,
    fs_out: f64,
    duration_s: Option<f64>,
    smooth_corner_hz: Option<f64>,
) -> Result<SampledSignal> {
    if !(delta_up.is_finite() && delta_up > 0.0 && delta_dn.is_finite() && delta_dn > 0.0) {
        return Err(Error::Decode("thresholds must be positive".into()));
    }
    if !v0.is_finite() {
        return Err(Error::Decode("initial level must be finite".into()));
    }
    check_stream(events, EventSource::Adm)?;
    let n_out = output_length(
        fs_out,
        duration_s,
        events.last().map(|e| e.t_ns as f64 * 1e-9),
    )?;

    let mut out = Vec::with_capacity(n_out);
    let mut idx = 0usize;
    let mut n_up = 0u64;
    let mut n_dn = 0u64;
    for n in 0..n_out {
        let t_ns = (n as f64 * 1e9 / fs_out).round() as u64;
        while idx < events.len() && events[idx].t_ns <= t_ns {
            match events[idx].polarity.expect("validated") {
                Polarity::Up => n_up += 1,
                Polarity::Dn => n_dn += 1,
            }
            idx += 1;
        }
        out.push(staircase_level(v0, delta_up, delta_dn, n_up, n_dn));
    }

    if let Some(fc) = smooth_corner_hz {
        if !(fc.is_finite() && fc > 0.0 && fc < fs_out / 2.0) {
            return Err(Error::Decode(format!(
                "smoothing corner must lie in (0, fs_out/2), got {fc}"
            )));
        }
        let alpha = 1.0 - (-2.0 * std::f64::consts::PI * fc / fs_out).exp();
        let mut y = v0;
        for v in &mut out {
            y += alpha * (*v - y);
            *v = y;
        }
    }
    SampledSignal::from_samples(fs_out, out)
}

/// Sliding-window rate estimate of a PFM spike train in events per second.
///
/// Sample `n` of the output counts the spikes inside `(t_n - window, t_n]`
/// divided by the window length, on a grid starting at t = 0 with rate
/// `fs_out`; a time-translated spike train therefore yields the same curve
/// shifted by the same amount.
pub fn pfm_rate_decode(
    events: &[Event],
    window_s: f64,
    fs_out: f64,
    duration_s: Option<f64>,
) -> Result<SampledSignal> {
    if !(window_s.is_finite() && window_s > 0.0) {
        return Err(Error::Decode(format!("window must be positive, got {window_s}")));
    }
    check_stream(events, EventSource::Pfm)?;
    let n_out = output_length(
        fs_out,
        duration_s,
        events.last().map(|e| e.t_ns as f64 * 1e-9 + window_s),
    )?;

    let window_ns = (window_s * 1e9).round().max(1.0) as u64;
    let mut out = Vec::with_capacity(n_out);
    let mut head = 0usize; // first event with t > t_n - window
    let mut tail = 0usize; // first event with t > t_n
    for n in 0..n_out {
        let t_ns = (n as f64 * 1e9 / fs_out).round() as u64;
        while tail < events.len() && events[tail].t_ns <= t_ns {
            tail += 1;
        }
        let lo = t_ns.saturating_sub(window_ns);
        while head < events.len() && events[head].t_ns <= lo {
            head += 1;
        }
        out.push((tail - head) as f64 / window_s);
    }
    SampledSignal::from_samples(fs_out, out)
}
