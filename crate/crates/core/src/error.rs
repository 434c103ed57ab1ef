use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("could not place {what} after {attempts} attempts")]
    Placement { what: &'static str, attempts: usize },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("cannot normalize an all-zero channel tensor")]
    NormalizationImpossible,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("power factor undefined: control B with no selected antennas")]
    UndefinedPowerFactor,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("bad tensor file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
