//! Behavioral simulator for an event-based multichannel analog front-end.
//!
//! The model covers 16 recording channels, each built from a low-noise
//! amplifier, a DC servo loop, a fourth-order gm-C band-pass filter and a
//! programmable-gain stage. The conditioned signal is converted to spike
//! trains by one of two encoders: an asynchronous delta modulator (ADM) that
//! emits UP/DN events on level crossings, or a pulse-frequency modulator
//! (PFM) built from a rectifier, a transconductor and a leaky
//! integrate-and-fire neuron. Events leave the array over address-event
//! (AER) links with a four-phase handshake, and decoders on the far side
//! reconstruct the signal or an instantaneous rate estimate.
//!
//! The crate is organized bottom-up:
//!
//! * [`signal`], [`event`], [`config`] — shared data types and validation.
//! * [`biquad`], [`noise`], [`pipeline`] — the analog chain.
//! * [`adm`], [`pfm`] — spike encoders.
//! * [`aer`] — address encoding, arbitration and the handshake link.
//! * [`decode`] — receiver-side reconstruction.
//! * [`spectrum`], [`measure`] — PSD/SNDR estimators and the measurement
//!   harness (frequency sweeps, filter banks, rate curves).
//! * [`io`] — config files, WAV/CSV input, event and report CSV output.
//! * [`cli`] — the `afe-sim` command-line front-end.
//!
//! Everything is deterministic: all stochastic features (noise injection,
//! threshold mismatch, link jitter) draw from counter-derived ChaCha streams
//! seeded from a single master seed, so identical inputs and seeds produce
//! byte-identical outputs.

pub mod adm;
pub mod aer;
pub mod biquad;
pub mod cli;
mod clock;
pub mod config;
pub mod decode;
mod error;
pub mod event;
pub mod io;
pub mod measure;
pub mod noise;
pub mod pfm;
pub mod pipeline;
mod rng;
pub mod signal;
pub mod spectrum;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
