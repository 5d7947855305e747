//! Seed derivation for per-channel, per-purpose random streams.
//!
//! Every stochastic feature (noise injection, threshold mismatch, link
//! jitter) gets its own ChaCha stream whose seed is derived from the master
//! seed, a purpose tag and a lane index through a SplitMix64 mix. Streams
//! are therefore independent of each other and of the order in which
//! channels are simulated.

/// Purpose tags for derived streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Purpose {
    Noise = 1,
    AdmMismatch = 2,
    LinkJitter = 3,
}

/// One round of the SplitMix64 output function.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed for (`master`, `purpose`, `lane`).
pub(crate) fn derive_seed(master: u64, purpose: Purpose, lane: u8) -> u64 {
    let tagged = master
        ^ (purpose as u64).wrapping_mul(0xA076_1D64_78BD_642F)
        ^ ((lane as u64) << 48);
    splitmix64(splitmix64(tagged))
}
