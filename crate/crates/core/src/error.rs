use thiserror::Error;

/// Failure modes shared by every solver and diagnostic in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what}: value {value} outside its domain")]
    Domain { what: &'static str, value: f64 },

    #[error("non-positive density {rho:e} at cell {index} (x = {x}) at t = {time}")]
    Vacuum { index: usize, x: f64, time: f64, rho: f64 },

    #[error("time step {dt:e} below 1e-14 at t = {time}")]
    DtUnderflow { dt: f64, time: f64 },

    #[error("non-finite value in {field} at cell {index}, t = {time}")]
    NonFinite {
        field: &'static str,
        index: usize,
        time: f64,
    },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("boundary contamination: {0}")]
    Contaminated(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for failures caused by the numerics rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::Vacuum { .. }
                | Error::DtUnderflow { .. }
                | Error::NonFinite { .. }
                | Error::Quadrature(_)
                | Error::Contaminated(_)
        )
    }
}
