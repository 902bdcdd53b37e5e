use thiserror::Error;

/// Errors raised by mesh construction, the discrete solvers and the drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("interface folds inside element {element} ({sign_changes} sign-change edges); refine the mesh")]
    UnresolvedInterface { element: usize, sign_changes: usize },

    #[error("degenerate cut in element {element}: immersed basis system is singular or ill-conditioned (condition estimate {condition:.3e})")]
    DegenerateCut { element: usize, condition: f64 },

    #[error("missing immersed basis for cut element {0}")]
    MissingBasis(usize),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("incompatible source for pure-Neumann pressure: integral {integral:.3e} exceeds tolerance")]
    IncompatibleSource { integral: f64 },

    #[error("unknown case id '{0}'")]
    UnknownCase(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("time level {level}: {source}")]
    AtTimeLevel {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
