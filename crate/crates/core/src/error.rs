use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid scenario config: {0}")]
    Config(String),

    /// A state or matrix entry became NaN or infinite.
    #[error("numerical overflow at t = {time}")]
    NumericalOverflow { time: f64 },

    #[error("interval {interval} [{start}, {end}]: {source}")]
    Interval {
        interval: usize,
        start: f64,
        end: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("jump operator B_{index} is numerically singular (condition estimate {condition:e})")]
    SingularJump { index: usize, condition: f64 },

    #[error("fundamental matrix X({time}) is numerically singular (condition estimate {condition:e})")]
    SingularFundamental { time: f64, condition: f64 },

    #[error("decay rate undefined: zero norm at t = {time}")]
    RateUndefined { time: f64 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Innermost error, with interval context peeled off.
    pub fn root(&self) -> &Error {
        match self {
            Error::Interval { source, .. } => source.root(),
            other => other,
        }
    }

    /// Stable machine-readable tag for one-line diagnostics.
    pub fn code(&self) -> &'static str {
        match self.root() {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Config(_) => "config",
            Error::NumericalOverflow { .. } => "numerical-overflow",
            Error::Interval { .. } => unreachable!(),
            Error::SingularJump { .. } => "singular-jump",
            Error::SingularFundamental { .. } => "singular-fundamental",
            Error::RateUndefined { .. } => "rate-undefined",
            Error::HypothesisViolated(_) => "hypothesis-violated",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
