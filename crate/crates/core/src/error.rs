use nalgebra::Complex;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, LoewnerError>;

#[derive(Debug, Error)]
pub enum LoewnerError {
    #[error("inconsistent dimensions: {0}")]
    Dimension(String),

    #[error("E matrix is singular or numerically singular")]
    SingularE,

    #[error("pencil sE - A is singular at s = {s} (s is a pole of the system)")]
    SingularPencil { s: Complex<f64> },

    #[error("frequency response hits a pole at omega = {omega}")]
    PoleHit { omega: f64 },

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("state dimension {n} exceeds the dense eigensolver limit of {max}")]
    DimensionTooLarge { n: usize, max: usize },

    #[error("duplicate frequency point {0}")]
    DuplicateFrequency(Complex<f64>),

    #[error("index ({out_idx}, {in_idx}) out of range for a {outputs}x{inputs} response")]
    IndexOutOfRange {
        out_idx: usize,
        in_idx: usize,
        outputs: usize,
        inputs: usize,
    },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("at least 2 samples are required, got {0}")]
    TooFewSamples(usize),

    #[error("point {0} is not on the imaginary axis")]
    NotImaginaryAxis(Complex<f64>),

    #[error("conjugate pairing failed: {0}")]
    Pairing(String),

    #[error("interpolation points coincide at {0}")]
    CoincidentPoints(Complex<f64>),

    #[error("imaginary residue {residue:e} after realification exceeds tolerance {tol:e}")]
    RealifyResidueTooLarge { residue: f64, tol: f64 },

    #[error("Sylvester residuals ({res1:e}, {res2:e}) exceed tolerance {tol:e}")]
    SylvesterResidual { res1: f64, res2: f64, tol: f64 },

    #[error("order {r} out of range 1..={max}")]
    OrderOutOfRange { r: usize, max: usize },

    #[error("invalid tolerance {0}; expected a value in (0, 1)")]
    InvalidTolerance(f64),

    #[error("reduced E matrix is singular at order {r}; try r +/- 1 or another shift")]
    SingularEt { r: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl LoewnerError {
    /// True for failures caused by malformed input files or parameters, as
    /// opposed to numerical breakdowns.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            LoewnerError::Dimension(_)
                | LoewnerError::InvalidRange(_)
                | LoewnerError::DuplicateFrequency(_)
                | LoewnerError::IndexOutOfRange { .. }
                | LoewnerError::TooFewSamples(_)
                | LoewnerError::NotImaginaryAxis(_)
                | LoewnerError::OrderOutOfRange { .. }
                | LoewnerError::InvalidTolerance(_)
                | LoewnerError::DimensionTooLarge { .. }
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(
            self,
            LoewnerError::Io(_)
                | LoewnerError::Json(_)
                | LoewnerError::Csv(_)
                | LoewnerError::Parse { .. }
                | LoewnerError::SchemaMismatch(_)
        )
    }
}
