use thiserror::Error;

/// Every failure mode of the estimation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error("no observations on the {0} side of the cutoff")]
    EmptySide(&'static str),
    #[error("singular design: {0}")]
    SingularDesign(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("weak discontinuity: |tau_D| = {0:.4} is below the 0.05 threshold")]
    WeakDiscontinuity(f64),
    #[error("denominator near zero: |tau_D| = {0:e}")]
    DenominatorNearZero(f64),
    #[error("degenerate objective: both variance numerators are zero")]
    DegenerateObjective,
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("zero curvature: phi_plus * phi_minus = 0")]
    ZeroCurvature,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("all replications trimmed")]
    AllTrimmed,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
}

impl Error {
    /// Stable machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSample(_) => "InvalidSample",
            Error::EmptySide(_) => "EmptySide",
            Error::SingularDesign(_) => "SingularDesign",
            Error::InsufficientData(_) => "InsufficientData",
            Error::DegenerateSample(_) => "DegenerateSample",
            Error::WeakDiscontinuity(_) => "WeakDiscontinuity",
            Error::DenominatorNearZero(_) => "DenominatorNearZero",
            Error::DegenerateObjective => "DegenerateObjective",
            Error::AssumptionViolated(_) => "AssumptionViolated",
            Error::ZeroCurvature => "ZeroCurvature",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::AllTrimmed => "AllTrimmed",
            Error::Parse(_) => "ParseError",
            Error::Validation(_) => "ValidationError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
