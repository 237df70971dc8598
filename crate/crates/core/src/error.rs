use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("age {age} outside table range {min}..={max}")]
    AgeOutOfRange { age: u32, min: u32, max: u32 },
    #[error("missing RMD divisor for age {0}")]
    MissingDivisor(u32),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("solution is not optimal")]
    NotOptimal,
    #[error("plan infeasible{}", year.map(|y| alloc::format!(" (first violation near year {y})")).unwrap_or_default())]
    Infeasible { year: Option<usize> },
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("unpaired reports: {0}")]
    Unpaired(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
