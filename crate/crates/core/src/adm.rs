//! Asynchronous delta modulation: a level-crossing encoder with an up and a
//! down threshold around a stepping reference.
//!
//! Each sample is compared against the reference `v_ref`. When the input
//! exceeds `v_ref` by at least `delta_up`, an UP event fires, the reference
//! steps up by `delta_up`, and the UP comparator disarms; the symmetric rule
//! produces DN events. A disarmed comparator re-arms only once the residue
//! falls back below its threshold minus the Schmitt-style hysteresis, which
//! models the comparator's reset dead band. At most one event per polarity
//! can fire per sample, so a step discontinuity is climbed over several
//! samples rather than emitting a burst at one instant.
//!
//! The reference is never accumulated in floating point: it is derived from
//! the event counters via [`staircase_level`], the same expression the
//! decoder uses, which makes encode/reconstruct an exact identity at event
//! times.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::clock::StreamClock;
use crate::config::{validate_config, AdmConfig, ChannelConfig};
use crate::event::{Event, Polarity, MAX_CHANNEL};
use crate::rng::{derive_seed, Purpose};
use crate::signal::SampledSignal;
use crate::{Error, Result};

/// Threshold mismatch draws are floored at this fraction of the nominal
/// step so a wild draw can never produce a non-positive threshold.
pub const MISMATCH_FLOOR: f64 = 0.05;

/// Reference level after `n_up` UP and `n_dn` DN events from `v0`.
///
/// Both the encoder and [`crate::decode::adm_reconstruct`] evaluate this
/// exact expression, so reconstruction at event times is bit-identical to
/// the encoder's internal reference.
#[inline]
pub fn staircase_level(v0: f64, delta_up: f64, delta_dn: f64, n_up: u64, n_dn: u64) -> f64 {
    (v0 + n_up as f64 * delta_up) - n_dn as f64 * delta_dn
}

/// Streaming ADM encoder for one channel.
#[derive(Debug)]
pub struct AdmEncoder {
    cfg: AdmConfig,
    channel: u8,
    delta_up: f64,
    delta_dn: f64,
    n_up: u64,
    n_dn: u64,
    armed_up: bool,
    armed_dn: bool,
    clock: StreamClock,
}

impl AdmEncoder {
    /// Builds an encoder; when `threshold_sigma > 0` the realized thresholds
    /// are drawn once per instance from the channel's mismatch stream.
    pub fn new(cfg: &AdmConfig, channel: u8, seed: u64) -> Result<AdmEncoder> {
        if channel > MAX_CHANNEL {
            return Err(Error::Encode(format!(
                "channel {channel} out of range 0..={MAX_CHANNEL}"
            )));
        }
        let probe = ChannelConfig {
            adm: cfg.clone(),
            ..ChannelConfig::default()
        };
        if let Some(v) = validate_config(&probe).iter().find(|v| v.path.starts_with("adm.")) {
            return Err(Error::config(v.path.clone(), v.message.clone()));
        }

        let (delta_up, delta_dn) = if cfg.threshold_sigma > 0.0 {
            let mut rng =
                ChaCha12Rng::seed_from_u64(derive_seed(seed, Purpose::AdmMismatch, channel));
            let normal = Normal::new(0.0, cfg.threshold_sigma).expect("sigma validated");
            let up = cfg.delta_up + normal.sample(&mut rng);
            let dn = cfg.delta_dn + normal.sample(&mut rng);
            (
                up.max(MISMATCH_FLOOR * cfg.delta_up),
                dn.max(MISMATCH_FLOOR * cfg.delta_dn),
            )
        } else {
            (cfg.delta_up, cfg.delta_dn)
        };

        Ok(AdmEncoder {
            cfg: cfg.clone(),
            channel,
            delta_up,
            delta_dn,
            n_up: 0,
            n_dn: 0,
            armed_up: true,
            armed_dn: true,
            clock: StreamClock::new(),
        })
    }

    /// Thresholds actually in effect (equal to the configured ones unless
    /// mismatch is enabled).
    pub fn realized_deltas(&self) -> (f64, f64) {
        (self.delta_up, self.delta_dn)
    }

    /// Current reference level.
    pub fn v_ref(&self) -> f64 {
        staircase_level(
            self.cfg.v_ref_init,
            self.delta_up,
            self.delta_dn,
            self.n_up,
            self.n_dn,
        )
    }

    /// Event counts so far as (up, down).
    pub fn counts(&self) -> (u64, u64) {
        (self.n_up, self.n_dn)
    }

    /// Encodes one block. Blocks may be split anywhere: state and the sample
    /// clock carry across calls, so any split yields identical events.
    pub fn encode_block(&mut self, x: &SampledSignal) -> Result<Vec<Event>> {
        self.clock.begin_block(x)?;
        let mut events = Vec::new();
        for (i, &xv) in x.samples.iter().enumerate() {
            let mut v_ref = self.v_ref();
            if self.armed_up && xv - v_ref >= self.delta_up {
                events.push(Event::adm(self.clock.t_ns(i), self.channel, Polarity::Up)?);
                self.n_up += 1;
                self.armed_up = false;
                v_ref = self.v_ref();
            }
            if self.armed_dn && v_ref - xv >= self.delta_dn {
                events.push(Event::adm(self.clock.t_ns(i), self.channel, Polarity::Dn)?);
                self.n_dn += 1;
                self.armed_dn = false;
                v_ref = self.v_ref();
            }
            if !self.armed_up && xv - v_ref <= self.delta_up - self.cfg.hysteresis {
                self.armed_up = true;
            }
            if !self.armed_dn && v_ref - xv <= self.delta_dn - self.cfg.hysteresis {
                self.armed_dn = true;
            }
        }
        self.clock.advance(x.len());
        Ok(events)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Reference semantics, written as the straightforward per-sample loop
    /// with an accumulated reference. Every behavior of the encoder is
    /// checked against this.
    fn brute_force(
        x: &[f64],
        fs: f64,
        du: f64,
        dd: f64,
        hyst: f64,
        v0: f64,
    ) -> Vec<(u64, Polarity)> {
        let mut v = v0;
        let mut armed_up = true;
        let mut armed_dn = true;
        let mut out = Vec::new();
        for (n, &xv) in x.iter().enumerate() {
            let t = (n as f64 * 1e9 / fs).round() as u64;
            if armed_up && xv - v >= du {
                out.push((t, Polarity::Up));
                v += du;
                armed_up = false;
            }
            if armed_dn && v - xv >= dd {
                out.push((t, Polarity::Dn));
                v -= dd;
                armed_dn = false;
            }
            if !armed_up && xv - v <= du - hyst {
                armed_up = true;
            }
            if !armed_dn && v - xv <= dd - hyst {
                armed_dn = true;
            }
        }
        out
    }

    fn encode_all(cfg: &AdmConfig, x: &[f64], fs: f64) -> (Vec<Event>, AdmEncoder) {
        let mut enc = AdmEncoder::new(cfg, 0, 0).unwrap();
        let sig = SampledSignal::from_samples(fs, x.to_vec()).unwrap();
        let ev = enc.encode_block(&sig).unwrap();
        (ev, enc)
    }

    #[test]
    fn hand_worked_staircase() {
        // du = dd = 10 mV, hyst = 2 mV, v0 = 0, fs = 1 kHz.
        // x (mV):   0   4  12  15  22  29  26  14   3   -8
        // fires:            UP      UP              DN  DN
        // v_ref:    0   0  10  10  20  20  20  20  10   0
        let cfg = AdmConfig {
            delta_up: 10e-3,
            delta_dn: 10e-3,
            hysteresis: 2e-3,
            v_ref_init: 0.0,
            threshold_sigma: 0.0,
        };
        let x: Vec<f64> = [0.0, 4.0, 12.0, 15.0, 22.0, 29.0, 26.0, 14.0, 3.0, -8.0]
            .iter()
            .map(|v| v * 1e-3)
            .collect();
        let (ev, enc) = encode_all(&cfg, &x, 1000.0);
        let got: Vec<(u64, Polarity)> = ev.iter().map(|e| (e.t_ns, e.polarity.unwrap())).collect();
        assert_eq!(
            got,
            vec![
                (2_000_000, Polarity::Up),
                (4_000_000, Polarity::Up),
                (8_000_000, Polarity::Dn),
                (9_000_000, Polarity::Dn),
            ]
        );
        assert_eq!(enc.counts(), (2, 2));
        assert_eq!(enc.v_ref(), 0.0);
    }

    #[test]
    fn matches_brute_force_on_smooth_signals() {
        let cfg = AdmConfig::default();
        let fs = 10_000.0;
        let x: Vec<f64> = (0..4096)
            .map(|n| {
                let t = n as f64 / fs;
                0.08 * (2.0 * std::f64::consts::PI * 60.0 * t).sin()
                    + 0.03 * (2.0 * std::f64::consts::PI * 190.0 * t).sin()
            })
            .collect();
        let (ev, _) = encode_all(&cfg, &x, fs);
        let want = brute_force(&x, fs, cfg.delta_up, cfg.delta_dn, cfg.hysteresis, 0.0);
        let got: Vec<(u64, Polarity)> = ev.iter().map(|e| (e.t_ns, e.polarity.unwrap())).collect();
        assert!(!got.is_empty());
        assert_eq!(got, want);
    }

    #[test]
    fn tracks_within_one_step_in_the_slew_bounded_regime() {
        // With the input starting on the reference and per-sample slew kept
        // at or below (delta - hysteresis), a fired comparator always
        // re-arms on the same sample, so the residue stays within one step.
        let cfg = AdmConfig {
            delta_up: 10e-3,
            delta_dn: 10e-3,
            hysteresis: 1e-3,
            v_ref_init: 0.0,
            threshold_sigma: 0.0,
        };
        let max_slew = cfg.delta_up.min(cfg.delta_dn) - cfg.hysteresis;
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut x = vec![0.0f64];
        for _ in 0..20_000 {
            let step = (normal.sample(&mut rng) * 0.6 * max_slew).clamp(-max_slew, max_slew);
            x.push(x.last().unwrap() + step);
        }
        let mut enc = AdmEncoder::new(&cfg, 0, 0).unwrap();
        let sig = SampledSignal::from_samples(10_000.0, x.clone()).unwrap();
        enc.encode_block(&sig).unwrap();
        // Replay to inspect the per-sample residue.
        let mut enc = AdmEncoder::new(&cfg, 0, 0).unwrap();
        for (n, &xv) in x.iter().enumerate() {
            let block = SampledSignal::new(10_000.0, n as f64 / 10_000.0, vec![xv]).unwrap();
            enc.encode_block(&block).unwrap();
            let resid = (xv - enc.v_ref()).abs();
            assert!(
                resid < cfg.delta_up,
                "residue {resid} at sample {n} exceeds one step"
            );
        }
    }

    #[test]
    fn fast_ramp_inside_the_dead_band_can_outrun_rearming() {
        // Per-sample slew strictly between (delta - hysteresis) and delta
        // leaves the comparator disarmed with the input already past the
        // next threshold, and it never fires again on a monotone ramp. This
        // freezes the re-arm semantics rather than an idealized tracking
        // bound.
        let cfg = AdmConfig {
            delta_up: 10e-3,
            delta_dn: 10e-3,
            hysteresis: 1e-3,
            v_ref_init: 0.0,
            threshold_sigma: 0.0,
        };
        let x: Vec<f64> = (0..1000).map(|n| n as f64 * 9.6e-3).collect();
        let (ev, enc) = encode_all(&cfg, &x, 1000.0);
        assert_eq!(ev.len(), 1, "exactly one event before the encoder sticks");
        assert!(x.last().unwrap() - enc.v_ref() > 5.0 * cfg.delta_up);
        // The same ramp with hysteresis disabled tracks fine.
        let cfg0 = AdmConfig { hysteresis: 0.0, ..cfg };
        let (ev0, enc0) = encode_all(&cfg0, &x, 1000.0);
        assert!(ev0.len() > 900);
        assert!(x.last().unwrap() - enc0.v_ref() < 2.0 * cfg0.delta_up);
    }

    #[test]
    fn timestamps_respect_the_block_origin() {
        let cfg = AdmConfig::default();
        let mut enc = AdmEncoder::new(&cfg, 2, 0).unwrap();
        let sig = SampledSignal::new(1000.0, 1.5, vec![0.0, 0.05]).unwrap();
        let ev = enc.encode_block(&sig).unwrap();
        assert_eq!(ev[0].t_ns, 1_500_000_000 + 1_000_000);
        assert_eq!(ev[0].channel, 2);
    }

    #[test]
    fn rejects_non_contiguous_blocks() {
        let cfg = AdmConfig::default();
        let mut enc = AdmEncoder::new(&cfg, 0, 0).unwrap();
        let a = SampledSignal::from_samples(1000.0, vec![0.0; 10]).unwrap();
        enc.encode_block(&a).unwrap();
        // Correct continuation is t0 = 10 ms; give it 20 ms instead.
        let b = SampledSignal::new(1000.0, 0.020, vec![0.0; 10]).unwrap();
        assert!(enc.encode_block(&b).is_err());
        // Rate changes are rejected too.
        let c = SampledSignal::new(2000.0, 0.010, vec![0.0; 10]).unwrap();
        assert!(enc.encode_block(&c).is_err());
    }

    #[test]
    fn mismatch_draws_are_deterministic_and_floored() {
        let cfg = AdmConfig {
            threshold_sigma: 2e-3,
            ..AdmConfig::default()
        };
        let a = AdmEncoder::new(&cfg, 3, 42).unwrap();
        let b = AdmEncoder::new(&cfg, 3, 42).unwrap();
        assert_eq!(a.realized_deltas(), b.realized_deltas());
        let c = AdmEncoder::new(&cfg, 4, 42).unwrap();
        assert_ne!(a.realized_deltas(), c.realized_deltas());
        let d = AdmEncoder::new(&cfg, 3, 43).unwrap();
        assert_ne!(a.realized_deltas(), d.realized_deltas());
        assert_ne!(a.realized_deltas().0, cfg.delta_up);
        // A huge sigma cannot push a threshold to zero or below.
        let wild = AdmConfig {
            threshold_sigma: 10.0,
            ..AdmConfig::default()
        };
        for ch in 0..16 {
            for seed in 0..8 {
                let e = AdmEncoder::new(&wild, ch, seed).unwrap();
                let (du, dd) = e.realized_deltas();
                assert!(du >= MISMATCH_FLOOR * wild.delta_up);
                assert!(dd >= MISMATCH_FLOOR * wild.delta_dn);
            }
        }
    }

    #[test]
    fn rejects_invalid_config_and_channel() {
        let bad = AdmConfig {
            delta_up: 0.0,
            ..AdmConfig::default()
        };
        assert!(AdmEncoder::new(&bad, 0, 0).is_err());
        assert!(AdmEncoder::new(&AdmConfig::default(), 16, 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn splitting_blocks_never_changes_the_events(
            split in 1usize..499,
            seed in 0u64..1000,
            f in 5.0f64..80.0,
            amp in 0.01f64..0.2,
        ) {
            let cfg = AdmConfig { threshold_sigma: 1e-3, ..AdmConfig::default() };
            let fs = 5000.0;
            let x: Vec<f64> = (0..500)
                .map(|n| amp * (2.0 * std::f64::consts::PI * f * n as f64 / fs).sin())
                .collect();

            let mut whole = AdmEncoder::new(&cfg, 1, seed).unwrap();
            let all = whole
                .encode_block(&SampledSignal::from_samples(fs, x.clone()).unwrap())
                .unwrap();

            let mut parts = AdmEncoder::new(&cfg, 1, seed).unwrap();
            let a = SampledSignal::from_samples(fs, x[..split].to_vec()).unwrap();
            let b = SampledSignal::new(fs, split as f64 / fs, x[split..].to_vec()).unwrap();
            let mut got = parts.encode_block(&a).unwrap();
            got.extend(parts.encode_block(&b).unwrap());

            prop_assert_eq!(all, got);
            prop_assert_eq!(whole.v_ref().to_bits(), parts.v_ref().to_bits());
        }

        #[test]
        fn equivalent_to_brute_force_on_random_walks(
            seed in 0u64..500,
            du in 2e-3f64..30e-3,
            dd in 2e-3f64..30e-3,
            hyst_frac in 0.0f64..0.9,
            v0 in -0.05f64..0.05,
        ) {
            let hyst = hyst_frac * du.min(dd);
            let cfg = AdmConfig { delta_up: du, delta_dn: dd, hysteresis: hyst,
                                  v_ref_init: v0, threshold_sigma: 0.0 };
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let normal = Normal::new(0.0, 8e-3).unwrap();
            let mut x = vec![0.0f64];
            for _ in 0..511 {
                x.push(x.last().unwrap() + normal.sample(&mut rng));
            }
            let fs = 20_000.0;
            let mut enc = AdmEncoder::new(&cfg, 0, 0).unwrap();
            let ev = enc
                .encode_block(&SampledSignal::from_samples(fs, x.clone()).unwrap())
                .unwrap();
            let got: Vec<(u64, Polarity)> =
                ev.iter().map(|e| (e.t_ns, e.polarity.unwrap())).collect();
            let want = brute_force(&x, fs, du, dd, hyst, v0);
            prop_assert_eq!(got, want);
        }
    }
}
