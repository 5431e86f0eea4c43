use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not symmetric: entry ({row}, {col}) deviates from its transpose by {deviation:e}")]
    NotSymmetric { row: usize, col: usize, deviation: f64 },

    #[error("{what} did not converge (achieved residual {residual:e})")]
    Convergence { what: String, residual: f64 },

    #[error("band {j} is not admissible at B = {b}: F_j vanishes identically")]
    NotAdmissible { j: usize, b: f64 },

    #[error("energy {energy} lies within {distance:e} of an eigenvalue (required separation {required:e})")]
    GapViolation { energy: f64, distance: f64, required: f64 },

    #[error("gap {j} closed at lambda = {lambda}: band {j} reaches {upper}, band {next} starts at {lower}", next = j + 1)]
    BandOverlap { j: usize, lambda: f64, upper: f64, lower: f64 },

    #[error("config error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn convergence(what: impl Into<String>, residual: f64) -> Self {
        Error::Convergence { what: what.into(), residual }
    }

    /// True for failures of an iterative numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Convergence { .. })
    }
}
