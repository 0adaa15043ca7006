use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-ASCII character {0:?}")]
    NonAsciiInput(char),
    #[error("empty tuple")]
    EmptyTuple,
    #[error("symbol layer has no observations")]
    EmptyLayer,
    #[error("xtructure has no branches")]
    EmptyXtructure,
    #[error("empty input sequence")]
    EmptySequence,
    #[error("cannot merge xtructures learned with different hyperparameters")]
    HyperparameterMismatch,
    #[error("unsupported regex construct at position {position}: {what}")]
    UnsupportedConstruct { position: usize, what: String },
    #[error("regex syntax error at position {position}: {what}")]
    SyntaxError { position: usize, what: String },
    #[error("empty triple set")]
    EmptyTripleSet,
    #[error("bands ({bands}) x rows ({rows}) does not equal signature length {k}")]
    BandShapeMismatch { bands: usize, rows: usize, k: usize },
    #[error("signature length {0} is below the minimum of 16")]
    SignatureTooShort(usize),
    #[error("signatures have different lengths ({0} vs {1})")]
    SignatureLengthMismatch(usize, usize),
    #[error("label library is empty")]
    EmptyLibrary,
    #[error("at least two models are required")]
    TooFewModels,
    #[error("invalid hyperparameter: {0}")]
    InvalidParameter(String),
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("column not found: {0}")]
    ColumnNotFound(String),
    #[error("malformed CSV at line {line}: {message}")]
    MalformedCsv { line: u64, message: String },
    #[error("failed to write {}: {source}", path.display())]
    WriteFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("model file: {0}")]
    Model(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
