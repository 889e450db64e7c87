use thiserror::Error;

/// Errors raised by the laboratory's samplers, evaluators and simulators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter { name: &'static str, value: f64, reason: &'static str },

    #[error("moment E[X^{order}] is infinite for tail index {tail_index}")]
    InfiniteMoment { order: f64, tail_index: f64 },

    #[error("gamma function has a pole at {0}")]
    GammaPole(f64),

    #[error("tabulated distribution has no residual (equilibrium) table")]
    MissingResidualTable,

    #[error("cannot parse distribution spec `{input}`: {reason}")]
    Parse { input: String, reason: String },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("system appears unstable: utilization estimate {utilization:.6} in every replication")]
    Unstable { utilization: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, name: &'static str, value: f64, reason: &'static str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value, reason })
    }
}
