//! Address-event representation: address words, channel arbitration, and a
//! four-phase handshake link model.
//!
//! ADM events use a 32-word address space (`channel << 1 | polarity`, with
//! UP = 1); PFM events use a 16-word space (the bare channel index). Each
//! encoder family leaves the array over its own link, so the two spaces
//! never mix on a wire.
//!
//! The link serializes one word at a time through the classic four-phase
//! cycle REQ-high, ACK-high, REQ-low, ACK-low (back to idle). Every phase
//! has a configurable base delay plus optional uniformly distributed jitter,
//! and a word is delivered when the cycle returns to idle. Words queue
//! behind an in-flight cycle, which models arbiter back-pressure under
//! bursts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::event::{check_time_ordered, Event, EventSource, Polarity};
use crate::{Error, Result};

/// Number of distinct ADM address words (16 channels x 2 polarities).
pub const ADM_ADDRESS_WORDS: u8 = 32;
/// Number of distinct PFM address words.
pub const PFM_ADDRESS_WORDS: u8 = 16;

/// A word on the address bus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AddressWord(pub u8);

/// Encodes an event's (channel, polarity) into its bus word.
pub fn encode_address(e: &Event) -> Result<AddressWord> {
    e.validate()?;
    let w = match e.source {
        EventSource::Adm => {
            let pol_bit = match e.polarity.expect("validated") {
                Polarity::Up => 1,
                Polarity::Dn => 0,
            };
            (e.channel << 1) | pol_bit
        }
        EventSource::Pfm => e.channel,
    };
    Ok(AddressWord(w))
}

/// Decodes a bus word back to (channel, polarity) given the link it arrived
/// on.
pub fn decode_address(word: AddressWord, source: EventSource) -> Result<(u8, Option<Polarity>)> {
    match source {
        EventSource::Adm => {
            if word.0 >= ADM_ADDRESS_WORDS {
                return Err(Error::Aer(format!(
                    "ADM address word {} out of range 0..{ADM_ADDRESS_WORDS}",
                    word.0
                )));
            }
            let pol = if word.0 & 1 == 1 { Polarity::Up } else { Polarity::Dn };
            Ok((word.0 >> 1, Some(pol)))
        }
        EventSource::Pfm => {
            if word.0 >= PFM_ADDRESS_WORDS {
                return Err(Error::Aer(format!(
                    "PFM address word {} out of range 0..{PFM_ADDRESS_WORDS}",
                    word.0
                )));
            }
            Ok((word.0, None))
        }
    }
}

/// Merges per-channel event sequences into one stream ordered by
/// `(t_ns, channel)`, preserving each input sequence's relative order.
///
/// Every sequence must be time-ordered and single-source, and all sequences
/// must share one source (one arbiter serves one link).
pub fn arbitrate(sequences: &[Vec<Event>]) -> Result<Vec<Event>> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let mut source: Option<EventSource> = None;
    for (i, seq) in sequences.iter().enumerate() {
        check_time_ordered(seq)
            .map_err(|e| Error::Aer(format!("sequence {i} is not time-ordered: {e}")))?;
        for e in seq {
            e.validate()?;
            match source {
                None => source = Some(e.source),
                Some(s) if s != e.source => {
                    return Err(Error::Aer(
                        "cannot arbitrate ADM and PFM events onto one link".into(),
                    ))
                }
                _ => {}
            }
        }
    }

    let total: usize = sequences.iter().map(Vec::len).sum();
    let mut heap = BinaryHeap::with_capacity(sequences.len());
    for (i, seq) in sequences.iter().enumerate() {
        if let Some(e) = seq.first() {
            heap.push(Reverse((e.t_ns, e.channel, i, 0usize)));
        }
    }
    let mut out = Vec::with_capacity(total);
    while let Some(Reverse((_, _, i, pos))) = heap.pop() {
        out.push(sequences[i][pos]);
        if let Some(e) = sequences[i].get(pos + 1) {
            heap.push(Reverse((e.t_ns, e.channel, i, pos + 1)));
        }
    }
    Ok(out)
}

/// Four-phase handshake timing in nanoseconds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HandshakeDelays {
    /// Sender raises REQ after the word is ready.
    pub req_rise_ns: u64,
    /// Receiver raises ACK after REQ.
    pub ack_rise_ns: u64,
    /// Sender drops REQ after ACK.
    pub req_fall_ns: u64,
    /// Receiver drops ACK after REQ falls, completing the cycle.
    pub ack_fall_ns: u64,
    /// Each phase additionally waits a uniform 0..=jitter_ns draw.
    pub jitter_ns: u64,
}

impl Default for HandshakeDelays {
    fn default() -> Self {
        HandshakeDelays {
            req_rise_ns: 25,
            ack_rise_ns: 25,
            req_fall_ns: 25,
            ack_fall_ns: 25,
            jitter_ns: 0,
        }
    }
}

impl HandshakeDelays {
    pub fn cycle_ns(&self) -> u64 {
        self.req_rise_ns + self.ack_rise_ns + self.req_fall_ns + self.ack_fall_ns
    }
}

/// Handshake phases; `Idle` is both the rest state and the end of a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Idle,
    ReqHigh,
    AckHigh,
    ReqLowWait,
}

/// One recorded phase edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseTransition {
    pub t_ns: u64,
    pub phase: Phase,
}

/// An event delivered across the link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delivery {
    /// The original event (source-side timestamp).
    pub event: Event,
    /// The word that crossed the bus.
    pub word: AddressWord,
    /// When the handshake cycle completed.
    pub delivered_at_ns: u64,
}

/// State of one AER link.
#[derive(Debug)]
pub struct LinkState {
    delays: HandshakeDelays,
    rng: ChaCha12Rng,
    phase: Phase,
    in_flight: Option<AddressWord>,
    /// When the link last returned to idle.
    free_at_ns: u64,
    last_event_ns: u64,
}

impl LinkState {
    pub fn new(delays: &HandshakeDelays, seed: u64) -> Result<LinkState> {
        if delays.cycle_ns() == 0 {
            return Err(Error::Aer(
                "handshake delays must sum to at least 1 ns per cycle".into(),
            ));
        }
        Ok(LinkState {
            delays: delays.clone(),
            rng: ChaCha12Rng::seed_from_u64(seed),
            phase: Phase::Idle,
            in_flight: None,
            free_at_ns: 0,
            last_event_ns: 0,
        })
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    fn hold(&mut self, base: u64) -> u64 {
        if self.delays.jitter_ns == 0 {
            base
        } else {
            base + self.rng.random_range(0..=self.delays.jitter_ns)
        }
    }

    /// Runs one full handshake cycle for `event`, returning the delivery and
    /// the four phase edges. Events must be submitted in time order; a cycle
    /// still in flight delays the next word (back-pressure).
    pub fn transmit(&mut self, event: &Event) -> Result<(Delivery, [PhaseTransition; 4])> {
        event.validate()?;
        if event.t_ns < self.last_event_ns {
            return Err(Error::Aer(format!(
                "events must be submitted in time order ({} ns after {} ns)",
                event.t_ns, self.last_event_ns
            )));
        }
        self.last_event_ns = event.t_ns;
        let word = encode_address(event)?;
        self.in_flight = Some(word);

        let start = event.t_ns.max(self.free_at_ns);
        let t1 = start + self.hold(self.delays.req_rise_ns);
        self.phase = Phase::ReqHigh;
        let t2 = t1 + self.hold(self.delays.ack_rise_ns);
        self.phase = Phase::AckHigh;
        let t3 = t2 + self.hold(self.delays.req_fall_ns);
        self.phase = Phase::ReqLowWait;
        let t4 = t3 + self.hold(self.delays.ack_fall_ns);
        self.phase = Phase::Idle;
        self.in_flight = None;
        self.free_at_ns = t4;

        let trace = [
            PhaseTransition { t_ns: t1, phase: Phase::ReqHigh },
            PhaseTransition { t_ns: t2, phase: Phase::AckHigh },
            PhaseTransition { t_ns: t3, phase: Phase::ReqLowWait },
            PhaseTransition { t_ns: t4, phase: Phase::Idle },
        ];
        Ok((
            Delivery {
                event: *event,
                word,
                delivered_at_ns: t4,
            },
            trace,
        ))
    }
}

/// Pushes a whole event stream through a fresh link, returning deliveries
/// and the concatenated phase trace.
pub fn handshake_run(
    events: &[Event],
    delays: &HandshakeDelays,
    seed: u64,
) -> Result<(Vec<Delivery>, Vec<PhaseTransition>)> {
    let mut link = LinkState::new(delays, seed)?;
    let mut deliveries = Vec::with_capacity(events.len());
    let mut trace = Vec::with_capacity(events.len() * 4);
    for e in events {
        let (d, t) = link.transmit(e)?;
        deliveries.push(d);
        trace.extend_from_slice(&t);
    }
    Ok((deliveries, trace))
}

/// Checks that a phase trace is a legal sequence of complete four-phase
/// cycles with non-decreasing timestamps.
pub fn trace_is_legal(trace: &[PhaseTransition]) -> bool {
    if trace.len() % 4 != 0 {
        return false;
    }
    let expected = [Phase::ReqHigh, Phase::AckHigh, Phase::ReqLowWait, Phase::Idle];
    let mut last_t = 0u64;
    for (i, tr) in trace.iter().enumerate() {
        if tr.phase != expected[i % 4] {
            return false;
        }
        if tr.t_ns < last_t {
            return false;
        }
        last_t = tr.t_ns;
    }
    true
}
