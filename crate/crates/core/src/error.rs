use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad arguments or configuration.
    Usage,
    /// Input data violates a declared invariant or cannot be parsed.
    Data,
    /// A numerical procedure failed (separation, rank deficiency, ...).
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("core-data: {0}")]
    Io(#[from] std::io::Error),

    #[error("core-data: schema error: {0}")]
    Schema(String),

    #[error("core-data: parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("core-data: domain error at row {row}: {message}")]
    Domain { row: usize, message: String },

    #[error("core-data: policy syntax error at position {position}: {message}")]
    PolicySyntax { position: usize, message: String },

    #[error("core-data: unbound column '{0}' in policy")]
    UnboundColumn(String),

    #[error("{module}: invalid argument: {message}")]
    Argument {
        module: &'static str,
        message: String,
    },

    #[error("first-stage: empty cell {cell}")]
    EmptyCell { cell: String },

    #[error("first-stage: design matrix is rank deficient; collinear monomials: {}", monomials.join(", "))]
    RankDeficient { monomials: Vec<String> },

    #[error("first-stage: {0}")]
    Separation(String),

    #[error("first-stage: fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{module}: missing nuisance evaluator: {what}")]
    MissingEvaluator {
        module: &'static str,
        what: &'static str,
    },

    #[error("identification: row {row}: {source}")]
    Row {
        row: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{module}: numerical failure: {message}")]
    Numerical {
        module: &'static str,
        message: String,
    },
}

impl Error {
    pub(crate) fn argument(module: &'static str, message: impl Into<String>) -> Self {
        Error::Argument {
            module,
            message: message.into(),
        }
    }

    pub(crate) fn numerical(module: &'static str, message: impl Into<String>) -> Self {
        Error::Numerical {
            module,
            message: message.into(),
        }
    }

    pub(crate) fn in_row(self, row: usize) -> Self {
        Error::Row {
            row,
            source: Box::new(self),
        }
    }

    pub(crate) fn in_fold(self, fold: usize) -> Self {
        Error::Fold {
            fold,
            source: Box::new(self),
        }
    }

    /// Structural copy, used where a stored failure must be reported again.
    pub(crate) fn duplicate(&self) -> Error {
        match self {
            Error::Io(e) => Error::Io(std::io::Error::new(e.kind(), e.to_string())),
            Error::Schema(m) => Error::Schema(m.clone()),
            Error::Parse {
                row,
                column,
                message,
            } => Error::Parse {
                row: *row,
                column: column.clone(),
                message: message.clone(),
            },
            Error::Domain { row, message } => Error::Domain {
                row: *row,
                message: message.clone(),
            },
            Error::PolicySyntax { position, message } => Error::PolicySyntax {
                position: *position,
                message: message.clone(),
            },
            Error::UnboundColumn(c) => Error::UnboundColumn(c.clone()),
            Error::Argument { module, message } => Error::Argument {
                module,
                message: message.clone(),
            },
            Error::EmptyCell { cell } => Error::EmptyCell { cell: cell.clone() },
            Error::RankDeficient { monomials } => Error::RankDeficient {
                monomials: monomials.clone(),
            },
            Error::Separation(m) => Error::Separation(m.clone()),
            Error::Fold { fold, source } => source.duplicate().in_fold(*fold),
            Error::MissingEvaluator { module, what } => Error::MissingEvaluator { module, what },
            Error::Row { row, source } => source.duplicate().in_row(*row),
            Error::Numerical { module, message } => Error::Numerical {
                module,
                message: message.clone(),
            },
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Argument { .. } | Error::PolicySyntax { .. } | Error::UnboundColumn(_) => {
                ErrorKind::Usage
            }
            Error::Schema(_)
            | Error::Io(_)
            | Error::Parse { .. }
            | Error::Domain { .. }
            | Error::EmptyCell { .. }
            | Error::MissingEvaluator { .. } => ErrorKind::Data,
            Error::RankDeficient { .. } | Error::Separation(_) | Error::Numerical { .. } => {
                ErrorKind::Numerical
            }
            Error::Fold { source, .. } | Error::Row { source, .. } => source.kind(),
        }
    }
}
