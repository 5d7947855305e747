//! Event stream CSV: `t_ns,source,channel,polarity`, one event per row.
//!
//! Timestamps are integer nanoseconds, `source` is `ADM` or `PFM`, and
//! `polarity` is `UP`/`DN` for ADM events and the placeholder `NA` for PFM
//! events. Rows must be time-ordered.

use std::path::Path;

use crate::event::{check_time_ordered, Event, EventSource, Polarity};
use crate::{Error, Result};

const HEADER: &str = "t_ns,source,channel,polarity";

/// Renders events as CSV text, header included.
pub fn events_to_csv(events: &[Event]) -> String {
    use std::fmt::Write;
    let mut s = String::with_capacity(16 + events.len() * 16);
    s.push_str(HEADER);
    s.push('\n');
    for e in events {
        let pol = e.polarity.map_or("NA", |p| p.as_str());
        let _ = writeln!(s, "{},{},{},{}", e.t_ns, e.source.as_str(), e.channel, pol);
    }
    s
}

/// Writes events to `path` as CSV.
pub fn save_events_csv(path: &Path, events: &[Event]) -> Result<()> {
    std::fs::write(path, events_to_csv(events))?;
    Ok(())
}

/// Parses event CSV text, checking the header, every field, the
/// polarity/source pairing and time ordering. Errors carry 1-based line
/// numbers.
pub fn parse_events_csv(text: &str) -> Result<Vec<Event>> {
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

    let mut events = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                line,
                format!("expected 4 fields, got {}", fields.len()),
            ));
        }
        let t_ns: u64 = fields[0]
            .parse()
            .map_err(|_| Error::parse(line, format!("bad timestamp {:?}", fields[0])))?;
        let source = match fields[1] {
            "ADM" => EventSource::Adm,
            "PFM" => EventSource::Pfm,
            other => return Err(Error::parse(line, format!("bad source {other:?}"))),
        };
        let channel: u8 = fields[2]
            .parse()
            .map_err(|_| Error::parse(line, format!("bad channel {:?}", fields[2])))?;
        let polarity = match fields[3] {
            "UP" => Some(Polarity::Up),
            "DN" => Some(Polarity::Dn),
            "NA" => None,
            other => return Err(Error::parse(line, format!("bad polarity {other:?}"))),
        };
        let event = Event {
            t_ns,
            source,
            channel,
            polarity,
        };
        event
            .validate()
            .map_err(|e| Error::parse(line, e.to_string()))?;
        if let Some(prev) = events.last() {
            let prev: &Event = prev;
            if t_ns < prev.t_ns {
                return Err(Error::parse(
                    line,
                    format!("timestamps must be non-decreasing: {} after {}", t_ns, prev.t_ns),
                ));
            }
        }
        events.push(event);
    }
    check_time_ordered(&events)?;
    Ok(events)
}

/// Loads an event CSV file.
pub fn load_events_csv(path: &Path) -> Result<Vec<Event>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::file(path.display().to_string(), e.to_string()))?;
    parse_events_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_every_event() {
        let events = vec![
            Event::adm(100, 3, Polarity::Up).unwrap(),
            Event::pfm(250, 9).unwrap(),
            Event::adm(250, 4, Polarity::Dn).unwrap(),
            Event::pfm(1_000_000_000, 15).unwrap(),
        ];
        let text = events_to_csv(&events);
        assert!(text.starts_with("t_ns,source,channel,polarity\n"));
        assert!(text.contains("100,ADM,3,UP\n"));
        assert!(text.contains("250,PFM,9,NA\n"));
        assert_eq!(parse_events_csv(&text).unwrap(), events);
    }

    #[test]
    fn empty_stream_round_trips() {
        let text = events_to_csv(&[]);
        assert_eq!(parse_events_csv(&text).unwrap(), vec![]);
    }

    #[test]
    fn parse_errors_point_at_the_line() {
        let cases: Vec<(&str, usize, &str)> = vec![
            ("nope\n1,ADM,0,UP\n", 1, "expected header"),
            ("", 1, "empty file"),
            ("t_ns,source,channel,polarity\n1,ADM,0\n", 2, "expected 4 fields"),
            ("t_ns,source,channel,polarity\n-1,ADM,0,UP\n", 2, "bad timestamp"),
            ("t_ns,source,channel,polarity\n1,adm,0,UP\n", 2, "bad source"),
            ("t_ns,source,channel,polarity\n1,ADM,x,UP\n", 2, "bad channel"),
            ("t_ns,source,channel,polarity\n1,ADM,16,UP\n", 2, "out of range"),
            ("t_ns,source,channel,polarity\n1,ADM,0,na\n", 2, "bad polarity"),
            ("t_ns,source,channel,polarity\n1,ADM,0,NA\n", 2, "missing a polarity"),
            ("t_ns,source,channel,polarity\n1,PFM,0,UP\n", 2, "must not carry"),
            (
                "t_ns,source,channel,polarity\n5,PFM,0,NA\n4,PFM,0,NA\n",
                3,
                "non-decreasing",
            ),
        ];
        for (text, want_line, want_msg) in cases {
            match parse_events_csv(text) {
                Err(Error::Parse { line, message }) => {
                    assert_eq!(line, want_line, "line for {text:?}");
                    assert!(message.contains(want_msg), "msg {message:?} for {text:?}");
                }
                other => panic!("expected parse error for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn blank_lines_are_skipped() {
        let text = "t_ns,source,channel,polarity\n\n1,PFM,0,NA\n\n";
        assert_eq!(parse_events_csv(text).unwrap().len(), 1);
    }
}
