use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes of the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    InvalidDate(String),
    /// A value violates its type invariant.
    Value(String),
    Dimension { expected: usize, got: usize },
    NonFinite(String),
    NoCommonAssets,
    DegenerateMatrix,
    MissingAsset(String),
    EmptyGroup,
    NonpositiveConsumption(String),
    EmptySeries,
    DuplicateDate { cell: String, date: crate::Date },
    InsufficientCoverage {
        window: u8,
        variable: &'static str,
        days: usize,
        required: usize,
    },
    ShapeMismatch(String),
    Size { expected: usize, got: usize },
    MissingBlock(&'static str),
    SingularSystem,
    TooFewGroups { groups: usize, folds: usize },
    MissingFeature(String),
    DegenerateTarget,
    Empty,
    InvalidSpec(String),
    ConfigMismatch(String),
    Config(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidDate(s) => write!(f, "invalid date `{s}`"),
            Error::Value(s) => write!(f, "invalid value: {s}"),
            Error::Dimension { expected, got } => {
                write!(f, "expected {expected} values, got {got}")
            }
            Error::NonFinite(s) => write!(f, "non-finite value in {s}"),
            Error::NoCommonAssets => {
                f.write_str("no asset is recorded by both GHS and DHS inventories")
            }
            Error::DegenerateMatrix => f.write_str("every asset column is constant"),
            Error::MissingAsset(a) => write!(f, "inventory lacks asset `{a}`"),
            Error::EmptyGroup => f.write_str("no household records for group"),
            Error::NonpositiveConsumption(s) => {
                write!(f, "per-capita consumption must be positive ({s})")
            }
            Error::EmptySeries => f.write_str("empty series"),
            Error::DuplicateDate { cell, date } => {
                write!(f, "cell {cell} has more than one record for {date}")
            }
            Error::InsufficientCoverage {
                window,
                variable,
                days,
                required,
            } => write!(
                f,
                "window {window} has {days} days of {variable}, at least {required} required"
            ),
            Error::ShapeMismatch(s) => write!(f, "shape mismatch: {s}"),
            Error::Size { expected, got } => {
                write!(f, "expected a {expected}x{expected} tile, got side {got}")
            }
            Error::MissingBlock(b) => write!(f, "feature block `{b}` is enabled but absent"),
            Error::SingularSystem => f.write_str("normal equations are singular"),
            Error::TooFewGroups { groups, folds } => {
                write!(f, "{groups} groups cannot fill {folds} folds")
            }
            Error::MissingFeature(n) => write!(f, "row lacks model feature `{n}`"),
            Error::DegenerateTarget => f.write_str("target has zero variance"),
            Error::Empty => f.write_str("no values"),
            Error::InvalidSpec(s) => write!(f, "invalid grid spec: {s}"),
            Error::ConfigMismatch(s) => write!(f, "configuration mismatch: {s}"),
            Error::Config(s) => write!(f, "invalid scenario config: {s}"),
        }
    }
}

impl core::error::Error for Error {}
