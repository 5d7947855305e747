//! Spike events produced by the channel encoders.

use crate::{Error, Result};

/// Which encoder family produced an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventSource {
    Adm,
    Pfm,
}

impl EventSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventSource::Adm => "ADM",
            EventSource::Pfm => "PFM",
        }
    }
}

impl std::fmt::Display for EventSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Level-crossing direction for ADM events. PFM events carry no polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Up,
    Dn,
}

impl Polarity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Polarity::Up => "UP",
            Polarity::Dn => "DN",
        }
    }
}

impl std::fmt::Display for Polarity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A single spike event.
///
/// Invariants: `channel <= 15`, and `polarity` is `Some` iff the source is
/// [`EventSource::Adm`]. Use [`Event::adm`] / [`Event::pfm`] to construct
/// values that satisfy them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    /// Timestamp in integer nanoseconds.
    pub t_ns: u64,
    pub source: EventSource,
    pub channel: u8,
    pub polarity: Option<Polarity>,
}

/// Highest valid channel index (16 channels, 0-based).
pub const MAX_CHANNEL: u8 = 15;

impl Event {
    pub fn adm(t_ns: u64, channel: u8, polarity: Polarity) -> Result<Event> {
        Event::check_channel(channel)?;
        Ok(Event {
            t_ns,
            source: EventSource::Adm,
            channel,
            polarity: Some(polarity),
        })
    }

    pub fn pfm(t_ns: u64, channel: u8) -> Result<Event> {
        Event::check_channel(channel)?;
        Ok(Event {
            t_ns,
            source: EventSource::Pfm,
            channel,
            polarity: None,
        })
    }

    fn check_channel(channel: u8) -> Result<()> {
        if channel > MAX_CHANNEL {
            return Err(Error::Encode(format!(
                "channel {channel} out of range 0..={MAX_CHANNEL}"
            )));
        }
        Ok(())
    }

    /// Checks the polarity/source pairing invariant.
    pub fn validate(&self) -> Result<()> {
        Event::check_channel(self.channel)?;
        match (self.source, self.polarity) {
            (EventSource::Adm, Some(_)) | (EventSource::Pfm, None) => Ok(()),
            (EventSource::Adm, None) => {
                Err(Error::Encode("ADM event is missing a polarity".into()))
            }
            (EventSource::Pfm, Some(_)) => {
                Err(Error::Encode("PFM event must not carry a polarity".into()))
            }
        }
    }
}

/// Returns an error unless timestamps are non-decreasing.
pub fn check_time_ordered(events: &[Event]) -> Result<()> {
    for w in events.windows(2) {
        if w[1].t_ns < w[0].t_ns {
            return Err(Error::Encode(format!(
                "event stream goes back in time: {} ns after {} ns",
                w[1].t_ns, w[0].t_ns
            )));
        }
    }
    Ok(())
}
