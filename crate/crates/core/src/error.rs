use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("spin index {index} out of range for a {n}-spin register (labels are 1..={n})")]
    SpinIndex { index: usize, n: usize },
    #[error("spin pair ({0}, {1}) must name two distinct spins")]
    DegeneratePair(usize, usize),
    #[error("spin set is empty")]
    EmptySpinSet,
    #[error("basis index {index} out of range for dimension {dim}")]
    BasisIndex { index: usize, dim: usize },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("register of {0} spins exceeds the supported maximum of {max}", max = crate::MAX_SPINS)]
    TooManySpins(usize),
    #[error("invalid spin system: {0}")]
    InvalidSystem(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("operator is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("invalid relaxation model: {0}")]
    InvalidModel(String),
    #[error("no singlet relaxation entry for pair ({0}, {1})")]
    UnknownPair(usize, usize),
    #[error("gate fidelity {0} outside (0, 1]")]
    Fidelity(f64),
    #[error("negative duration {0} s")]
    NegativeDuration(f64),
    #[error("correlation undefined: {0} has no deviation from the uniform background")]
    ZeroDeviation(&'static str),
    #[error("invalid spectrum parameters: {0}")]
    SpectrumParams(String),
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
