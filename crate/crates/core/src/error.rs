use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("water depth {depth:e} below h_min {h_min:e} at cell {cell}")]
    DepthViolation { cell: usize, depth: f64, h_min: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("array of length {got} where {expected} cells were expected")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("boundary unsupported: {0}")]
    BoundaryUnsupported(String),
    #[error("unsupported combination: {0}")]
    Unsupported(String),
    #[error("linearly ill-posed mode at k = {k}")]
    IllPosedMode { k: f64 },
    #[error("invalid layer fractions: {0}")]
    FractionError(String),
    #[error("eigen solve failed: {0}")]
    EigenFailure(String),
    #[error("linear solve failed: {0}")]
    SolveFailure(String),
    #[error("non-finite value produced: {0}")]
    StabilityViolation(String),
    #[error("time step {dt:e} exceeds stability bound {limit:e}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("negative enstrophy {value:e} at cell {cell}")]
    NegativeEnstrophy { cell: usize, value: f64 },
    #[error("constraint residual {residual:e} exceeds bound {bound:e}")]
    ConstraintDrift { residual: f64, bound: f64 },
    #[error("shear profile vertical mean {mean:e} is not zero")]
    NotZeroMean { mean: f64 },
    #[error("z = {z} outside the water column [{bottom}, {surface}]")]
    OutOfColumn { z: f64, bottom: f64, surface: f64 },
    #[error("runs cannot be compared: {0}")]
    MismatchedRuns(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("{model} at t = {t}: {source}")]
    Run { model: String, t: f64, source: Box<Error> },
}

impl Error {
    /// True for failures raised while integrating, false for bad input.
    pub fn is_numerical(&self) -> bool {
        if let Error::Run { source, .. } = self {
            return source.is_numerical();
        }
        matches!(
            self,
            Error::DepthViolation { .. }
                | Error::EigenFailure(_)
                | Error::SolveFailure(_)
                | Error::StabilityViolation(_)
                | Error::CflViolation { .. }
                | Error::NegativeEnstrophy { .. }
                | Error::ConstraintDrift { .. }
                | Error::IllPosedMode { .. }
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::DepthViolation { .. } => "DepthViolation",
            Error::InvalidParams(_) => "InvalidParams",
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::BoundaryUnsupported(_) => "BoundaryUnsupported",
            Error::Unsupported(_) => "Unsupported",
            Error::IllPosedMode { .. } => "IllPosedMode",
            Error::FractionError(_) => "FractionError",
            Error::EigenFailure(_) => "EigenFailure",
            Error::SolveFailure(_) => "SolveFailure",
            Error::StabilityViolation(_) => "StabilityViolation",
            Error::CflViolation { .. } => "CFLViolation",
            Error::NegativeEnstrophy { .. } => "NegativeEnstrophy",
            Error::ConstraintDrift { .. } => "ConstraintDrift",
            Error::NotZeroMean { .. } => "NotZeroMean",
            Error::OutOfColumn { .. } => "OutOfColumn",
            Error::MismatchedRuns(_) => "MismatchedRuns",
            Error::DegenerateFit(_) => "DegenerateFit",
            Error::Run { source, .. } => source.kind(),
        }
    }
}
