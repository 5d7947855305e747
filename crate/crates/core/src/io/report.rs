//! Measurement report CSV: `#`-prefixed provenance header lines followed by
//! labeled columns.

use crate::measure::MeasurementReport;
use crate::{Error, Result};

fn push_header(s: &mut String, rep: &MeasurementReport) {
    use std::fmt::Write;
    let _ = writeln!(s, "# kind={}", rep.kind.as_str());
    if let Some(seed) = rep.seed {
        let _ = writeln!(s, "# seed={seed}");
    }
    if let Some(d) = &rep.config_digest {
        let _ = writeln!(s, "# config_sha256={d}");
    }
}

/// Renders one report as CSV with provenance comments.
pub fn report_to_csv(rep: &MeasurementReport) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    push_header(&mut s, rep);
    let _ = writeln!(s, "{},{}", rep.x_label, rep.y_label);
    for (x, y) in rep.x.iter().zip(&rep.y) {
        let _ = writeln!(s, "{x},{y}");
    }
    s
}

/// Renders per-channel reports in long format with a leading `channel`
/// column. All reports must share axis labels and kind.
pub fn bank_to_csv(entries: &[(u8, MeasurementReport)]) -> Result<String> {
    use std::fmt::Write;
    let Some(((_, first), rest)) = entries.split_first() else {
        return Err(Error::Measure("bank output needs at least one channel".into()));
    };
    if rest.iter().any(|(_, r)| {
        r.kind != first.kind || r.x_label != first.x_label || r.y_label != first.y_label
    }) {
        return Err(Error::Measure("bank reports disagree on kind or axis labels".into()));
    }
    let mut s = String::new();
    let _ = writeln!(s, "# kind=bank");
    if let Some(seed) = first.seed {
        let _ = writeln!(s, "# seed={seed}");
    }
    if let Some(d) = &first.config_digest {
        let _ = writeln!(s, "# config_sha256={d}");
    }
    let _ = writeln!(s, "channel,{},{}", first.x_label, first.y_label);
    for (ch, rep) in entries {
        for (x, y) in rep.x.iter().zip(&rep.y) {
            let _ = writeln!(s, "{ch},{x},{y}");
        }
    }
    Ok(s)
}
