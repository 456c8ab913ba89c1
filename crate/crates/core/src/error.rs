use thiserror::Error;

/// Errors produced by graph construction and the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("graph is empty after cleanup")]
    EmptyGraph,

    #[error("graph has {components} connected components; pass take_lcc to keep the largest")]
    Disconnected { components: usize },

    #[error("self-loop at vertex {0}")]
    SelfLoop(u64),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("weight vector has length {got}, graph has {expected} edges")]
    WeightLength { expected: usize, got: usize },

    #[error("weight {value} at edge {edge} is negative or not finite")]
    BadWeight { edge: usize, value: f64 },

    /// The positive-weight support does not connect all vertices, so the
    /// shifted Laplacian is singular. `components` lists the vertex sets.
    #[error("weight support splits the graph into {} components", components.len())]
    DisconnectedSupport { components: Vec<Vec<usize>> },

    #[error("factorization failed: matrix is not positive definite")]
    Singular,

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("input is not a tree")]
    NotATree,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("operation not supported by the iterative backend: {0}")]
    Unsupported(&'static str),

    #[error("graph too large for this operation: n = {n}, limit {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
