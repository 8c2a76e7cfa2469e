use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("contact {index} at site {site} lies outside the lattice [0, {n_sites})")]
    ContactOutOfRange {
        index: usize,
        site: usize,
        n_sites: usize,
    },

    #[error(
        "self-consistent solve did not converge after {iterations} iterations \
         (last delta_r = {last_delta_r:e}, residual = {residual:e})"
    )]
    NotConverged {
        last_delta_r: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    StepTooLarge { dt: f64, bound: f64 },

    #[error("norm drift {drift:e} at t = {time} exceeds {limit:e}")]
    NormDrift { drift: f64, time: f64, limit: f64 },

    #[error("probability {value} outside [0, 1] beyond tolerance")]
    ProbabilityOutOfRange { value: f64 },

    #[error("mode index {n} is a multiple of the contact number {n_contacts} (cot(n pi / N_c) diverges)")]
    SingularMode { n: i64, n_contacts: usize },

    #[error("resolvent evaluated at a pole (|bracket| = {magnitude:e})")]
    AtPole { magnitude: f64 },

    #[error("tail fit window invalid: {0}")]
    FitWindow(String),

    #[error("sweep cell (alpha = {alpha}, spacing = {spacing}) failed: {source}")]
    SweepCell {
        alpha: f64,
        spacing: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o failure: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
