//! File formats: channel config text, event CSV, signal CSV, WAV input and
//! measurement report CSV.

mod config_text;
mod events_csv;
mod report;
mod signal_csv;
mod wav;

pub use config_text::{format_config, load_config, parse_config, Globals};
pub use events_csv::{events_to_csv, load_events_csv, parse_events_csv, save_events_csv};
pub use report::{bank_to_csv, report_to_csv};
pub use signal_csv::{load_signal_csv, parse_signal_csv, signal_to_csv};
pub use wav::{load_wav, save_wav};
