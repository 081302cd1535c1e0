use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A law or model failed one of its declared contracts (A1, A2, the
    /// ε(0) convention, or a statistical self-test).
    #[error("contract violation in {law}: {reason}")]
    Contract { law: String, reason: String },

    #[error("population overflowed u64 at generation {generation}")]
    PopulationOverflow { generation: usize },

    #[error("trajectory too short: need {needed} values, have {available}")]
    TrajectoryTooShort { needed: usize, available: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("control law `{0}` declares no limit for the mean growth rate")]
    NoGrowthLimit(String),

    #[error("model does not satisfy hypothesis A1; {0} is undefined")]
    RequiresA1(&'static str),

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),

    #[error("could not start worker pool: {0}")]
    ThreadPool(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
