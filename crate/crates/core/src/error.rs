use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("node {node} out of range for a graph with {n_nodes} nodes")]
    NodeOutOfRange { node: usize, n_nodes: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("matrix is not row-stochastic: {0}")]
    NotStochastic(String),

    #[error("transition matrix is not regular")]
    NotRegular,

    #[error("power iteration did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error("observation {observation} has zero likelihood under the model")]
    InconsistentObservation { observation: usize },

    #[error("evaluator returned an invalid influence value {0}")]
    InvalidEvaluation(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    ///
    /// 2 for anything the user can fix in their inputs, 3 for runtime
    /// inconsistencies detected while a run was in progress.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidGraph(_)
            | Error::Parse { .. }
            | Error::NodeOutOfRange { .. }
            | Error::InvalidParameter(_)
            | Error::Config(_) => 2,
            Error::NotStochastic(_)
            | Error::NotRegular
            | Error::NoConvergence(_)
            | Error::InconsistentObservation { .. }
            | Error::InvalidEvaluation(_) => 3,
            Error::Io(_) | Error::Csv(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
