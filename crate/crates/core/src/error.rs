use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field length {found} does not match grid with {expected} interior nodes")]
    GridMismatch { expected: usize, found: usize },

    #[error("linear solver breakdown: relative residual {residual:.3e} after {iterations} iterations")]
    SolverBreakdown { iterations: usize, residual: f64 },

    #[error("singular matrix: zero pivot at row {0}")]
    SingularMatrix(usize),

    #[error("eigen iteration did not converge: residual {residual:.3e} after {iterations} iterations")]
    EigenNonConvergence { iterations: usize, residual: f64 },

    /// The linearized operator has a non-positive principal eigenvalue.
    #[error("indefinite operator: principal eigenvalue estimate {nu1:.6e} is not positive")]
    IndefiniteOperator { nu1: f64, positive_eigenvector: bool },

    #[error("argument {value} outside the nonlinearity domain [0, 1)")]
    Domain { value: f64 },

    #[error("state reached the blow-up level: max {max:.6e} at node {node}")]
    Range { node: usize, max: f64 },

    #[error("initial data recipe needs the {0} stationary solution")]
    MissingContext(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate ratio: {0}")]
    DegenerateRatio(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no InLambda point found at mu = {mu_floor:.3e} for lambda = {lambda:.6e}")]
    BracketInit { lambda: f64, mu_floor: f64 },

    #[error("trajectory never enters the decay tail: {0}")]
    InsufficientDecay(String),

    #[error("configuration error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
