use thiserror::Error;

/// Errors shared by all solver modules.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// The trajectory left the physically admissible region before r = 1.
    /// `sign` is the sign of the escaping state, kept so that the miss
    /// function can still be bracketed across a blow-up region.
    #[error("trajectory escaped at r = {escape_radius} (sign {sign})")]
    Blowup { escape_radius: f64, sign: f64 },

    #[error("step size underflow at r = {0}")]
    StepUnderflow(f64),

    #[error("no sign change in bracket [{0}, {1}]")]
    NoBracket(f64, f64),

    #[error("root refinement failed: last valid bracket [{0}, {1}]")]
    RefineFailed(f64, f64),

    #[error("eigenvalue k = {k} not found in scan window (0, {hi}]")]
    EigenNotFound { k: usize, hi: f64 },

    #[error("profiles live on different grids")]
    GridMismatch,

    #[error("near-equilibrium starting value a = {0}")]
    NearEquilibrium(f64),

    #[error("fold refinement failed on branch starting at p = {0}")]
    FoldRefineFailed(f64),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
