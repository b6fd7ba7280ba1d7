use core::fmt;

use alloc::string::String;

/// Errors raised by the analysis routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A matrix or vector contains NaN or infinite entries.
    InvalidMatrix(String),
    /// Operand shapes do not agree.
    Dimension(String),
    /// The system violates `1 <= m <= n` or `1 <= l <= n`.
    DimensionPolicy(String),
    /// A count argument was out of its admissible range.
    InvalidArgument(String),
    /// `C A^(k-1) B` vanishes for every `k = 1..=n`, so no delay exists.
    NoInputOutputCoupling,
    /// The requested horizon is shorter than the delay.
    HorizonTooShort { horizon: usize, delay: usize },
    /// An index with a zero denominator was requested.
    UndefinedIndex(String),
    /// No subset of output rows of the requested size is trackable.
    NoTrackableSubset { requested: usize, rank: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidMatrix(msg) => write!(f, "invalid matrix: {msg}"),
            Error::Dimension(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::DimensionPolicy(msg) => write!(f, "dimension policy violated: {msg}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::NoInputOutputCoupling => {
                write!(f, "L undefined: no input-output coupling")
            }
            Error::HorizonTooShort { horizon, delay } => {
                write!(f, "horizon r = {horizon} is shorter than the delay L = {delay}")
            }
            Error::UndefinedIndex(msg) => write!(f, "index undefined: {msg}"),
            Error::NoTrackableSubset { requested, rank } => {
                write!(f, "no set of {requested} output rows is trackable (rank of first Markov parameter is {rank})")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
