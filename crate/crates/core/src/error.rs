use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },

    #[error("{name} = {value} is outside the allowed range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("coin spinor is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("cot(Ω) = {cot} has no real phase solution; Ω must lie in [π/4, 3π/4]")]
    PhaseDomain { cot: f64 },

    #[error("q = {0} is below the supported minimum 0.5")]
    InvalidQ(f64),

    #[error("time step must be at least 1")]
    ZeroTime,

    #[error("invalid walk configuration: {0}")]
    Config(String),

    #[error("power-law fit: {0}")]
    Fit(String),

    #[error("config key `{key}`: {message}")]
    Key { key: String, message: String },

    #[error("failed to parse config: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { name, value })
    }
}
