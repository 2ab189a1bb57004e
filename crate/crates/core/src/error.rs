use thiserror::Error;

use crate::krylov::Solution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("topology error: {0}")]
    Topology(String),

    #[error("degenerate triangle {index}: area {area:e} below {threshold:e}")]
    DegenerateElement {
        index: usize,
        area: f64,
        threshold: f64,
    },

    #[error("quadrature failure between triangles {test} and {source_tri}: {msg}")]
    QuadratureFailure {
        test: usize,
        source_tri: usize,
        msg: String,
    },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("matrix is singular at working precision: sigma_min/sigma_max = {ratio:e}")]
    SingularMatrix { ratio: f64 },

    #[error(
        "iterative solve stopped at max iterations ({}) with residual {:e}",
        .0.report.iterations,
        .0.report.residual
    )]
    MaxIterationsExceeded(Box<Solution>),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("dense linear algebra failure: {0}")]
    Linalg(String),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
