use thiserror::Error;

pub type Result<T> = std::result::Result<T, FuseError>;

#[derive(Debug, Error)]
pub enum FuseError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Newton iteration for the root of P_{degree} did not converge after {iterations} iterations")]
    RootFinding { degree: usize, iterations: usize },

    #[error("mesh integrity: {0}")]
    MeshIntegrity(String),

    #[error("singular Jacobian in element {element} (det = {det:e})")]
    SingularJacobian { element: usize, det: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("singular matrix: zero pivot at row {row}")]
    Singular { row: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("eigensolver did not converge within {0} iterations")]
    EigenNoConvergence(usize),

    #[error("loss of hyperbolicity at dof {dof}: {msg}")]
    Hyperbolicity { dof: usize, msg: String },

    #[error("Newton did not converge in {iterations} iterations (residual history {history:?})")]
    NewtonNoConvergence { iterations: usize, history: Vec<f64> },

    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("level {level}: {source}")]
    AtLevel {
        level: usize,
        #[source]
        source: Box<FuseError>,
    },
}

impl FuseError {
    pub(crate) fn at_level(self, level: usize) -> FuseError {
        match self {
            e @ FuseError::AtLevel { .. } => e,
            e => FuseError::AtLevel { level, source: Box::new(e) },
        }
    }
}
