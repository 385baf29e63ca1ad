use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("file {0} is empty")]
    EmptyFile(PathBuf),
    #[error("label column {0:?} not found")]
    MissingLabelColumn(String),
    #[error("no feature columns besides the label")]
    NoFeatures,
    #[error("row {row} has {found} fields, expected {expected}")]
    InconsistentArity {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("label missing at row {row}")]
    MissingLabel { row: usize },
    #[error("label at row {row} is not valid UTF-8")]
    UnparsableLabel { row: usize },
    #[error("missing value at row {row}, column {column:?}")]
    MissingValue { row: usize, column: String },
    #[error("data contains a single class; supervised discretization is undefined")]
    SingleClass,
    #[error("invalid split fractions: {0}")]
    InvalidFractions(String),
    #[error("split leaves the training set empty")]
    EmptyTrain,
    #[error("malformed dataset: {0}")]
    Malformed(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("depth {0} outside 1..=20")]
    DepthOutOfRange(u32),
    #[error("invalid tree: {0}")]
    InvalidStructure(String),
    #[error("feature vector has {found} entries, tree expects {expected}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("metric {0} requires binary labels")]
    NotBinary(String),
    #[error("invalid metric parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown variable id {0}")]
    UnknownVariable(usize),
    #[error("variable {name}: lower bound {lower} exceeds upper bound {upper}")]
    InvalidBounds { name: String, lower: f64, upper: f64 },
    #[error("variable {0} has an infinite bound; the LP engine needs boxed columns")]
    UnboundedColumn(String),
    #[error("name collision after sanitization: {0}")]
    NameCollision(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("master problem is infeasible (construction bug)")]
    InfeasibleMaster,
    #[error("LP iteration limit reached")]
    IterationLimit,
    #[error("assignment is not integral: {0}")]
    NonInteger(String),
    #[error("instance exceeds enumeration limits: {0}")]
    LimitsExceeded(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}
