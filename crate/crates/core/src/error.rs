use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("unsupported dimension {0}; only n = 2 and n = 3 are supported")]
    UnsupportedDimension(usize),

    #[error("gradient/Hessian requested at the singular point x = 0")]
    SingularPoint,

    #[error("anisotropy is not C2 away from the origin: {0}")]
    NotSmooth(String),

    #[error("invalid anisotropy: {0}")]
    InvalidAnisotropy(String),

    #[error("sphere resolution {got} is below the minimum {min}")]
    Resolution { got: usize, min: usize },

    #[error("admissibility violated: {0}")]
    Admissibility(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("degenerate set: {0}")]
    DegenerateSet(String),

    #[error("stencil was calibrated for a different anisotropy")]
    Calibration,

    #[error("capacity scaling overflow: {0}")]
    CapacityScale(String),

    #[error("boundary node {0}: curvature is only defined at interior nodes")]
    BoundaryNode(usize),

    #[error("curve topology error: {0}")]
    Topology(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("droplet reached the truncation margin of the computational box at step {step}")]
    Truncation { step: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed file {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Admissibility(_) => 3,
            Error::Truncation { .. } => 4,
            _ => 2,
        }
    }
}
