use std::path::PathBuf;

use welfarecast_core::Error as CoreError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{file}: {message}")]
    Schema { file: String, message: String },
    #[error("{file}:{line}: household {hh_id}: {message}")]
    Referential {
        file: String,
        line: u64,
        hh_id: String,
        message: String,
    },
    #[error("{file}:{line}: {message}")]
    Value { file: String, line: u64, message: String },
    #[error("{file}: expected {expected} feature columns, found {got}")]
    Dimension { file: String, expected: usize, got: usize },
    #[error("{file}:{line}: non-finite value in {column}")]
    NonFinite { file: String, line: u64, column: String },
    #[error("{file}: cell {cell} has more than one record for {date}")]
    DuplicateDate { file: String, cell: String, date: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: {source}")]
    Csv {
        file: String,
        #[source]
        source: csv::Error,
    },
    #[error("{file}: {source}")]
    Json {
        file: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{0}")]
    Config(String),
    #[error("{context}: {source}")]
    Stage {
        context: String,
        #[source]
        source: CoreError,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn stage(context: impl Into<String>) -> impl FnOnce(CoreError) -> Error {
        let context = context.into();
        move |source| Error::Stage { context, source }
    }

    fn core(&self) -> Option<&CoreError> {
        match self {
            Error::Stage { source, .. } | Error::Core(source) => Some(source),
            _ => None,
        }
    }

    /// Process exit code and stable machine-readable kind.
    pub fn exit_code(&self) -> (u8, &'static str) {
        if let Some(e) = self.core() {
            return core_code(e);
        }
        match self {
            Error::Config(_) => (3, "Config"),
            Error::Io { .. } => (4, "Io"),
            Error::Csv { .. } | Error::Json { .. } => (5, "Parse"),
            Error::Schema { .. } => (6, "Schema"),
            Error::Referential { .. } => (7, "Referential"),
            Error::Value { .. } => (8, "Value"),
            Error::Dimension { .. } => (9, "Dimension"),
            Error::NonFinite { .. } => (10, "NonFinite"),
            Error::DuplicateDate { .. } => (11, "DuplicateDate"),
            Error::Stage { .. } | Error::Core(_) => unreachable!(),
        }
    }
}

fn core_code(e: &CoreError) -> (u8, &'static str) {
    match e {
        CoreError::Value(_) => (8, "Value"),
        CoreError::Dimension { .. } => (9, "Dimension"),
        CoreError::NonFinite(_) => (10, "NonFinite"),
        CoreError::DuplicateDate { .. } => (11, "DuplicateDate"),
        CoreError::InvalidDate(_) => (12, "InvalidDate"),
        CoreError::NoCommonAssets => (13, "NoCommonAssets"),
        CoreError::DegenerateMatrix => (14, "DegenerateMatrix"),
        CoreError::MissingAsset(_) => (15, "MissingAsset"),
        CoreError::EmptyGroup => (16, "EmptyGroup"),
        CoreError::NonpositiveConsumption(_) => (17, "NonpositiveConsumption"),
        CoreError::EmptySeries => (18, "EmptySeries"),
        CoreError::InsufficientCoverage { .. } => (19, "InsufficientCoverage"),
        CoreError::ShapeMismatch(_) => (20, "ShapeMismatch"),
        CoreError::Size { .. } => (21, "Size"),
        CoreError::MissingBlock(_) => (22, "MissingBlock"),
        CoreError::SingularSystem => (23, "SingularSystem"),
        CoreError::TooFewGroups { .. } => (24, "TooFewGroups"),
        CoreError::MissingFeature(_) => (25, "MissingFeature"),
        CoreError::DegenerateTarget => (26, "DegenerateTarget"),
        CoreError::Empty => (27, "Empty"),
        CoreError::InvalidSpec(_) => (28, "InvalidSpec"),
        CoreError::ConfigMismatch(_) => (29, "ConfigMismatch"),
        CoreError::Config(_) => (30, "ScenarioConfig"),
    }
}

/// Exit code table printed by `--help`.
pub const EXIT_CODES: &str = "\
Exit codes:
   0 success            1 internal          2 usage
   3 Config             4 Io                5 Parse (CSV/JSON)
   6 Schema             7 Referential       8 Value
   9 Dimension         10 NonFinite        11 DuplicateDate
  12 InvalidDate       13 NoCommonAssets   14 DegenerateMatrix
  15 MissingAsset      16 EmptyGroup       17 NonpositiveConsumption
  18 EmptySeries       19 InsufficientCoverage
  20 ShapeMismatch     21 Size             22 MissingBlock
  23 SingularSystem    24 TooFewGroups     25 MissingFeature
  26 DegenerateTarget  27 Empty            28 InvalidSpec
  29 ConfigMismatch    30 ScenarioConfig
On failure a single line `error code=<n> kind=<Kind> message=\"...\"` is
written to stderr.";
