use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid mixed strategy: {0}")]
    InvalidStrategy(String),

    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("rationality parameter {0} outside (0, 1]")]
    AlphaOutOfRange(f64),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("unknown strategy label `{0}`")]
    UnknownStrategy(String),

    #[error("rank deficient system: rank {rank}, need {needed}")]
    RankDeficient { rank: usize, needed: usize },

    #[error("equilibrium does not have full support: {0}")]
    ReducedSupport(String),

    #[error("empty equilibrium family: {0}")]
    EmptyFamily(String),

    #[error("no root in bracket [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoRootInBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("invalid fictitious play configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable category, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGame(_) => "invalid_game",
            Error::InvalidStrategy(_) => "invalid_strategy",
            Error::ProbabilityOutOfRange(_) => "probability_out_of_range",
            Error::AlphaOutOfRange(_) => "alpha_out_of_range",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::UnknownStrategy(_) => "unknown_strategy",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::ReducedSupport(_) => "reduced_support",
            Error::EmptyFamily(_) => "empty_family",
            Error::NoRootInBracket { .. } => "no_root_in_bracket",
            Error::InvalidConfig(_) => "invalid_config",
            Error::Scenario(_) => "scenario",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
