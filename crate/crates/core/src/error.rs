use thiserror::Error;

/// Unified error type for the crate.
///
/// Variants are grouped by the layer that raises them; `Config` and `Parse`
/// carry enough structure for the CLI to print a field path or line number.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates a type invariant.
    #[error("config: {path}: {message}")]
    Config { path: String, message: String },

    /// A filter design request cannot be realized at the given sample rate.
    #[error("design: {0}")]
    Design(String),

    /// A sampled signal violates its invariants or mismatches the consumer.
    #[error("signal: {0}")]
    Signal(String),

    /// An encoder was driven outside its contract.
    #[error("encode: {0}")]
    Encode(String),

    /// An AER stream or link was driven outside its contract.
    #[error("aer: {0}")]
    Aer(String),

    /// A decoder input stream violates its contract.
    #[error("decode: {0}")]
    Decode(String),

    /// A spectral estimate cannot be formed from the given record.
    #[error("spectrum: {0}")]
    Spectrum(String),

    /// A measurement request is malformed.
    #[error("measure: {0}")]
    Measure(String),

    /// A text input (config, CSV) failed to parse.
    #[error("parse: line {line}: {message}")]
    Parse { line: usize, message: String },

    /// An input file has an unsupported format.
    #[error("input: {0}")]
    UnsupportedInput(String),

    /// A file could not be read.
    #[error("{path}: {message}")]
    File { path: String, message: String },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("wav: {0}")]
    Wav(#[from] hound::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn file(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::File {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
