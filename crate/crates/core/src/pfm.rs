//! Pulse-frequency modulation: the input is half-wave rectified, converted
//! to a current by a transconductor, and integrated on a leaky
//! integrate-and-fire neuron whose spike rate tracks the input amplitude.

use crate::clock::StreamClock;
use crate::config::{validate_config, ChannelConfig, PfmConfig};
use crate::event::{Event, MAX_CHANNEL};
use crate::signal::SampledSignal;
use crate::{Error, Result};

/// Inter-spike interval for a constant drive current, or `None` when the
/// drive never reaches threshold.
///
/// With net current `i - i_leak` charging `c_mem` from `v_reset` to `v_th`:
/// `ISI = t_refr + c_mem * (v_th - v_reset) / (i - i_leak)`.
pub fn lif_isi(i_const: f64, cfg: &PfmConfig) -> Option<f64> {
    let net = i_const - cfg.i_leak;
    if !(net > 0.0) {
        return None;
    }
    Some(cfg.t_refr + cfg.c_mem * (cfg.v_th - cfg.v_reset) / net)
}

/// Streaming PFM encoder for one channel.
///
/// Integration is forward Euler on the block's sample grid. During the
/// refractory period the membrane is held at `v_reset`; the refractory end
/// time is rounded up to whole nanoseconds, so two spikes are never closer
/// than `t_refr`.
#[derive(Debug)]
pub struct PfmEncoder {
    cfg: PfmConfig,
    channel: u8,
    v_mem: f64,
    refr_until_ns: u64,
    t_refr_ns: u64,
    clock: StreamClock,
}

impl PfmEncoder {
    pub fn new(cfg: &PfmConfig, channel: u8) -> Result<PfmEncoder> {
        if channel > MAX_CHANNEL {
            return Err(Error::Encode(format!(
                "channel {channel} out of range 0..={MAX_CHANNEL}"
            )));
        }
        let probe = ChannelConfig {
            pfm: cfg.clone(),
            ..ChannelConfig::default()
        };
        if let Some(v) = validate_config(&probe).iter().find(|v| v.path.starts_with("pfm.")) {
            return Err(Error::config(v.path.clone(), v.message.clone()));
        }
        Ok(PfmEncoder {
            cfg: cfg.clone(),
            channel,
            v_mem: cfg.v_reset,
            refr_until_ns: 0,
            t_refr_ns: (cfg.t_refr * 1e9).ceil() as u64,
            clock: StreamClock::new(),
        })
    }

    /// Current membrane potential.
    pub fn v_mem(&self) -> f64 {
        self.v_mem
    }

    /// Encodes one block, returning the spikes and the per-sample membrane
    /// trace (the value after each update, so spike samples read `v_reset`).
    pub fn encode_block(&mut self, x: &SampledSignal) -> Result<(Vec<Event>, SampledSignal)> {
        self.clock.begin_block(x)?;
        let dt = 1.0 / self.clock.fs().expect("clock started");
        let mut events = Vec::new();
        let mut trace = Vec::with_capacity(x.len());
        for (i, &xv) in x.samples.iter().enumerate() {
            let t = self.clock.t_ns(i);
            if t < self.refr_until_ns {
                self.v_mem = self.cfg.v_reset;
                trace.push(self.v_mem);
                continue;
            }
            let i_in = self.cfg.gm_amp * xv.max(0.0);
            self.v_mem += dt * (i_in - self.cfg.i_leak) / self.cfg.c_mem;
            if self.v_mem < 0.0 {
                self.v_mem = 0.0;
            }
            if self.v_mem >= self.cfg.v_th {
                events.push(Event::pfm(t, self.channel)?);
                self.v_mem = self.cfg.v_reset;
                self.refr_until_ns = t + self.t_refr_ns;
            }
            trace.push(self.v_mem);
        }
        self.clock.advance(x.len());
        let trace = SampledSignal::new(x.fs, x.t0, trace)?;
        Ok((events, trace))
    }
}
