//! Sample-to-nanosecond clock shared by the streaming encoders.

use crate::signal::SampledSignal;
use crate::{Error, Result};

/// Tracks the absolute sample index of a block stream so that event
/// timestamps depend only on the global sample position, never on how the
/// input was split into blocks.
#[derive(Debug, Clone)]
pub(crate) struct StreamClock {
    fs: f64,
    ns_per_sample: f64,
    t_base_ns: u64,
    n: u64,
    started: bool,
}

impl StreamClock {
    pub(crate) fn new() -> StreamClock {
        StreamClock {
            fs: 0.0,
            ns_per_sample: 0.0,
            t_base_ns: 0,
            n: 0,
            started: false,
        }
    }

    /// Locks onto the first block's rate and origin, then checks that every
    /// subsequent block continues the stream within half a sample.
    pub(crate) fn begin_block(&mut self, x: &SampledSignal) -> Result<()> {
        x.validate()?;
        if !self.started {
            self.fs = x.fs;
            self.ns_per_sample = 1e9 / x.fs;
            self.t_base_ns = (x.t0 * 1e9).round() as u64;
            self.started = true;
            return Ok(());
        }
        if (x.fs - self.fs).abs() > 1e-9 * self.fs {
            return Err(Error::Encode(format!(
                "block rate {} Hz does not match stream rate {} Hz",
                x.fs, self.fs
            )));
        }
        let expected_t0 = self.t_base_ns as f64 * 1e-9 + self.n as f64 / self.fs;
        if (x.t0 - expected_t0).abs() > 0.5 / self.fs {
            return Err(Error::Encode(format!(
                "block at t0 {} s is not contiguous with the stream (expected {} s)",
                x.t0, expected_t0
            )));
        }
        Ok(())
    }

    /// Timestamp of the sample at `offset` into the current block.
    #[inline]
    pub(crate) fn t_ns(&self, offset: usize) -> u64 {
        self.t_base_ns + ((self.n + offset as u64) as f64 * self.ns_per_sample).round() as u64
    }

    pub(crate) fn advance(&mut self, len: usize) {
        self.n += len as u64;
    }

    pub(crate) fn fs(&self) -> Option<f64> {
        self.started.then_some(self.fs)
    }
}
