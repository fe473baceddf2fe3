use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("face (axis {axis}, owner {owner}) is not incident to cell {cell}")]
    NotIncident {
        cell: usize,
        axis: usize,
        owner: usize,
    },

    #[error("field size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("negative density {0} passed to equation of state")]
    NegativeDensity(f64),

    #[error("non-finite state: {0}")]
    NonFinite(String),

    #[error("linear solver did not converge: relative residual {residual:.3e} after {iterations} iterations")]
    LinearSolver { iterations: usize, residual: f64 },

    #[error("nonpositive density {value:.3e} in cell {cell}")]
    Positivity { cell: usize, value: f64 },

    #[error("fixed-point iteration did not converge: increment {increment:.3e} after {iterations} iterations (dt = {dt:.3e})")]
    Picard {
        iterations: usize,
        increment: f64,
        dt: f64,
    },

    #[error("meshes are not nested: {0}")]
    NotNested(String),

    #[error("reference norm is zero for {0}")]
    ZeroReference(&'static str),

    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("malformed csv: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short stable tag used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidMesh(_) => "invalid_mesh",
            Error::NotIncident { .. } => "not_incident",
            Error::SizeMismatch { .. } => "size_mismatch",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NegativeDensity(_) => "negative_density",
            Error::NonFinite(_) => "non_finite",
            Error::LinearSolver { .. } => "linear_solver",
            Error::Positivity { .. } => "positivity",
            Error::Picard { .. } => "picard",
            Error::NotNested(_) => "not_nested",
            Error::ZeroReference(_) => "zero_reference",
            Error::Config(_) => "config",
            Error::Csv(_) => "csv",
            Error::Io(_) => "io",
        }
    }
}
