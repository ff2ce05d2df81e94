use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point outside symbol domain: {0}")]
    Domain(String),
    #[error("finite-difference stencil leaves the grid: {0}")]
    Stencil(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("kernel and cokernel dimensions differ ({kernel} vs {cokernel})")]
    Structural { kernel: usize, cokernel: usize },
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("eigenvalue within {distance:.3e} of the contour |z| = {epsilon:.3e}; try another radius")]
    Contour { epsilon: f64, distance: f64 },
    #[error("spectral projection bundle is discontinuous: {0}")]
    BundleDiscontinuity(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("iteration did not converge after {iters} steps (residual {residual:.3e})")]
    NoConvergence { iters: usize, residual: f64 },
    #[error("operator too large: {0}")]
    Size(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "E_DOMAIN",
            Error::Stencil(_) => "E_STENCIL",
            Error::Dimension(_) => "E_DIMENSION",
            Error::Structural { .. } => "E_STRUCTURAL",
            Error::UnknownModel(_) => "E_UNKNOWN_MODEL",
            Error::InvalidParams(_) => "E_PARAMS",
            Error::Input(_) => "E_INPUT",
            Error::Contour { .. } => "E_CONTOUR",
            Error::BundleDiscontinuity(..) => "E_BUNDLE",
            Error::Singular(_) => "E_SINGULAR",
            Error::NoConvergence { .. } => "E_NO_CONVERGENCE",
            Error::Size(_) => "E_SIZE",
            Error::Io(_) => "E_IO",
            Error::Json(_) => "E_JSON",
        }
    }
}
