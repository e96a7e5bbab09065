use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("disorder strength must lie in [0, 1), got {0}")]
    DisorderStrength(f64),
    #[error("sign correlation must lie in [0, 1], got {0}")]
    SignCorrelation(f64),
    #[error("chain needs at least {min} sites, got {got}")]
    ChainTooShort { min: usize, got: usize },
    #[error("expected {expected} couplings, got {got}")]
    CouplingCount { expected: usize, got: usize },
    #[error("coupling {index} is negative or not finite: {value}")]
    Coupling { index: usize, value: f64 },
    #[error("matrix is not symmetric: |H[{row}][{col}] - H[{col}][{row}]| = {deviation:e}")]
    NotSymmetric { row: usize, col: usize, deviation: f64 },
    #[error("site {site} out of range 1..={len}")]
    Site { site: usize, len: usize },
    #[error("measurement interval {index} is negative or not finite: {value}")]
    Interval { index: usize, value: f64 },
    #[error("logical qubit is not normalized: |alpha|^2 + |beta|^2 = {0}")]
    NotNormalized(f64),
    #[error("invalid scheduler configuration: {0}")]
    SchedulerConfig(&'static str),
    #[error("time {time} lies outside the endpoint grid [0, {horizon}]")]
    OutsideGrid { time: f64, horizon: f64 },
    #[error("invalid endpoint data: {0}")]
    Endpoints(&'static str),
    #[error("insufficient data for a scaling fit: {0}")]
    InsufficientData(&'static str),
    #[error("invalid sweep configuration: {0}")]
    SweepConfig(&'static str),
}
