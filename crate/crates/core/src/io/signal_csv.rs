//! Sampled signal CSV: `t_s,value` rows on a uniform time grid.
//!
//! The sample rate is inferred from the time column; rows must lie on a
//! uniform grid (to within a quarter sample) so that an accidentally
//! irregular export is rejected instead of silently resampled.

use std::path::Path;

use crate::signal::SampledSignal;
use crate::{Error, Result};

const HEADER: &str = "t_s,value";

/// Renders a signal as CSV text with full round-trip float precision.
pub fn signal_to_csv(x: &SampledSignal) -> String {
    use std::fmt::Write;
    let mut s = String::with_capacity(16 + x.samples.len() * 24);
    s.push_str(HEADER);
    s.push('\n');
    for (i, v) in x.samples.iter().enumerate() {
        let _ = writeln!(s, "{},{}", x.time_at(i), v);
    }
    s
}

/// Parses signal CSV text, inferring the sample rate from the time column.
pub fn parse_signal_csv(text: &str) -> Result<SampledSignal> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim() == HEADER => {}
        Some((_, first)) => {
            return Err(Error::parse(
                1,
                format!("expected header {HEADER:?}, got {:?}", first.trim()),
            ))
        }
        None => return Err(Error::parse(1, format!("empty file; expected header {HEADER:?}"))),
    }

    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut line_of = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let (t, v) = row
            .split_once(',')
            .ok_or_else(|| Error::parse(line, format!("expected 2 fields, got {row:?}")))?;
        let t: f64 = t
            .trim()
            .parse()
            .map_err(|_| Error::parse(line, format!("bad time {:?}", t.trim())))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::parse(line, format!("bad value {:?}", v.trim())))?;
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(Error::parse(
                    line,
                    format!("time must increase: {t} after {prev}"),
                ));
            }
        }
        times.push(t);
        values.push(v);
        line_of.push(line);
    }
    if times.len() < 2 {
        return Err(Error::Signal(format!(
            "signal CSV needs at least 2 rows, got {}",
            times.len()
        )));
    }

    let t0 = times[0];
    let n = times.len();
    let dt = (times[n - 1] - t0) / (n - 1) as f64;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Signal(format!("cannot infer a sample rate from dt {dt}")));
    }
    for i in 0..n {
        let expect = t0 + i as f64 * dt;
        if (times[i] - expect).abs() > 0.25 * dt {
            return Err(Error::parse(
                line_of[i],
                format!(
                    "time {} is off the uniform grid (expected {} for {} Hz)",
                    times[i],
                    expect,
                    1.0 / dt
                ),
            ));
        }
    }
    SampledSignal::new(1.0 / dt, t0, values)
}

/// Loads a signal CSV file.
pub fn load_signal_csv(path: &Path) -> Result<SampledSignal> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::file(path.display().to_string(), e.to_string()))?;
    parse_signal_csv(&text)
}
