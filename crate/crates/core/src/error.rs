use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operands live on different frequency grids")]
    GridMismatch,

    /// The function (or a determinant) comes too close to zero somewhere on the grid.
    #[error("not invertible: {what} (min modulus {min_modulus:e} at or below threshold {threshold:e})")]
    NotInvertible {
        what: String,
        min_modulus: f64,
        threshold: f64,
    },

    /// A winding number or index could not be resolved within the grid budget.
    #[error("index unresolved: {0}")]
    Unresolved(String),

    #[error("winding sum {raw} is not within 1e-6 of an integer")]
    NonInteger { raw: f64 },

    #[error("average winding estimate did not converge (error bar {error_bar:e})")]
    NonLatticeUnconverged { error_bar: f64 },

    #[error("grid refinement limit exhausted at {points} points")]
    RefinementExhausted { points: usize },

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("singular resolvent at {0}")]
    SingularResolvent(String),

    #[error("Riccati iteration diverged after {} iterations (last residual {:e})", history.len(), history.last().copied().unwrap_or(f64::NAN))]
    RiccatiDivergence { history: Vec<f64> },

    #[error("pole within {delta:e} of the unit circle (|pole| = {modulus})")]
    NearCircleDegeneracy { modulus: f64, delta: f64 },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("factor pairs are not unitarily equivalent (defect {defect:e})")]
    NotEquivalent { defect: f64 },

    #[error("closed loop is ill-posed: {0}")]
    SingularLoop(String),

    #[error("robust stability certificate violated (slack {slack:e})")]
    CertificateViolation { slack: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    /// True for the error classes that stem from malformed input documents.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Syntax { .. } | Error::Validation(_))
    }

    /// True when the failure is an undecidable index rather than a hard error.
    pub fn is_unresolved(&self) -> bool {
        matches!(
            self,
            Error::Unresolved(_)
                | Error::NonInteger { .. }
                | Error::NonLatticeUnconverged { .. }
                | Error::RefinementExhausted { .. }
        )
    }
}
