use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A tree operator was applied outside its domain.
    #[error("operator {op} is not defined at index {index}: {reason}")]
    InvalidOperator {
        op: &'static str,
        index: usize,
        reason: &'static str,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// The sampler was handed a state it cannot start from.
    #[error("invalid initial state: {0}")]
    InvalidInit(String),

    /// A flip rate exceeded its thinning bound; the target model is wrong.
    #[error("thinning bound violated at coordinate {coord}: rate {rate} > bound {bound}")]
    BoundViolation { coord: usize, rate: f64, bound: f64 },

    /// A boundary jump produced a mode with zero target density.
    #[error("boundary jump at coordinate {coord} produced an inconsistent mode")]
    InconsistentJump { coord: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Data(_) | Error::InvalidInit(_) | Error::Io(_) | Error::Csv(_) => 2,
            Error::Config(_) | Error::InvalidOperator { .. } => 3,
            Error::BoundViolation { .. } | Error::InconsistentJump { .. } | Error::Numerical(_) => 4,
        }
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
