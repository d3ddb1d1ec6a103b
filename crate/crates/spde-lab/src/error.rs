use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("white-noise kernel has no pointwise density")]
    NoPointwiseDensity,

    #[error("kernel singular at radius {radius}")]
    Singularity { radius: f64 },

    #[error("circulant embedding defect {defect:.3e} exceeds the 1% gate")]
    EmbeddingDefect { defect: f64 },

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("ellipticity violated at t={t}, x={x:?}, direction={dir:?}: ratio {ratio}")]
    Ellipticity {
        t: f64,
        x: [f64; 2],
        dir: [f64; 2],
        ratio: f64,
    },

    #[error("coefficient bound violated: {0}")]
    CoefficientBound(String),

    #[error("field blew up at step {step}: max value {max:.3e} (lambda = {lambda})")]
    BlowUp { step: usize, max: f64, lambda: f64 },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("trajectory unusable: {0}")]
    UnusableTrajectory(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::InvalidKernel(_)
            | Error::Precondition(_)
            | Error::Ellipticity { .. }
            | Error::CoefficientBound(_) => 1,
            _ => 2,
        }
    }
}
