use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("edge list is empty")]
    EmptyGraph,

    #[error("loop at vertex {0}")]
    Loop(u64),

    #[error("duplicate edge {0} {1}")]
    DuplicateEdge(u64, u64),

    #[error("terminal vertex {vertex} has degree {degree}")]
    TerminalVertex { vertex: u64, degree: usize },

    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("graph too large: {edges} oriented edges exceeds the limit of {limit}")]
    TooLarge { edges: usize, limit: usize },

    #[error("depth {depth} out of range: {msg}")]
    Depth { depth: usize, msg: String },

    #[error("spectral parameter z = 0 is not allowed")]
    ZeroParameter,

    #[error("operator shape mismatch: {0}")]
    Shape(String),

    #[error("vector is not an eigenvector of the turn sum at z = {z}: residual {residual:e}")]
    NotEigen { z: String, residual: f64 },

    #[error("{0} is not an eigenvalue within the cluster tolerance")]
    NotEigenvalue(String),

    #[error("reconstruction failed: {0}")]
    Reconstruction(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),

    #[error("linear algebra backend failure: {0}")]
    Linalg(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status used by the command-line front end. Status 1 is
    /// reserved for runs that completed with failing checks.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::TerminalVertex { .. } => 2,
            Error::Disconnected { .. } => 3,
            Error::Loop(_) => 4,
            Error::DuplicateEdge(..) => 5,
            Error::Parse { .. } => 6,
            Error::Io { .. } => 7,
            Error::EmptyGraph => 8,
            Error::TooLarge { .. } => 10,
            _ => 9,
        }
    }
}
