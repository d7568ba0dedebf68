use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    /// The closed forms require `h > L/2`.
    #[error("closed form unsupported for h = {h} m, L = {l} m (requires h > L/2)")]
    UnsupportedGeometry { h: f64, l: f64 },

    #[error("lossy closed form requires alpha > 0 (got {0})")]
    InvalidAlpha(f64),

    #[error("no regime row matches (h = {h} m, L = {l} m)")]
    NoRegime { h: f64, l: f64 },

    #[error("argument {0} outside the dilogarithm domain (-inf, 1]")]
    Domain(f64),

    #[error("config line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown config key `{key}` on line {line}")]
    UnknownKey { line: usize, key: String },

    #[error("invalid sweep: {0}")]
    Sweep(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
