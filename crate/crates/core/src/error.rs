use thiserror::Error;

use crate::expr::ExprError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("no convergence after {iterations} iterations (last step {last_step:e}, residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        last_step: f64,
        residual: f64,
    },
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

impl Error {
    /// Strips stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}
