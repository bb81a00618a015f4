use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("adiabatic exponent gamma = {0} must satisfy gamma > 1")]
    GammaOutOfRange(f64),
    #[error("viscosity exponent delta = {0} must satisfy delta > 1")]
    DeltaOutOfRange(f64),
    #[error("min(gamma, delta) = {0} must satisfy 1 < min(gamma, delta) <= 3")]
    MinExponentTooLarge(f64),
    #[error("non-finite parameter {0}")]
    NonFiniteParameter(&'static str),
    #[error("negative density {0}")]
    NegativeDensity(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid isolated mass group: {0}")]
    InvalidSpec(String),
    #[error("domain half-width {half_width} is below the required {required}")]
    DomainTooSmall { half_width: f64, required: f64 },
    #[error("invalid scheme configuration: {0}")]
    InvalidScheme(String),
    #[error("state has no cells")]
    EmptyState,
    #[error("time step {dt} exceeds the stability limit {limit}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("non-finite value in {field} at cell {cell}")]
    NonFiniteValue { field: &'static str, cell: usize },
    #[error("target time {target} precedes current time {current}")]
    NonMonotoneTarget { target: f64, current: f64 },
    #[error("position {x} outside [{x_min}, {x_max}]")]
    OutOfDomain { x: f64, x_min: f64, x_max: f64 },
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("envelopes do not cross before t_max = {t_max}")]
    NoCrossing { t_max: f64 },
    #[error("convergence study needs at least 3 levels, got {0}")]
    InsufficientLevels(usize),
    #[error("refinement levels must double: {0:?}")]
    NonDoublingLevels(Vec<usize>),
    #[error("invalid blow-up inputs: {0}")]
    InvalidBlowUpInput(String),
}
