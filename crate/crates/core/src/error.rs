//! Crate-wide error type.

use thiserror::Error;

/// Point at which a check or evaluation failed, in `f64` regardless of the
/// scalar type the computation ran with.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
}

impl Witness {
    pub fn at_x(x: Vec<f64>) -> Self {
        Witness { x, y: Vec::new(), t: 0.0 }
    }
}

impl std::fmt::Display for Witness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "x={:?}, y={:?}, t={}", self.x, self.y, self.t)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what}: dimension mismatch, expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {what} at {witness}")]
    NumericDomain { what: String, witness: Witness },

    #[error("unknown builtin `{name}`; valid names: {valid}")]
    UnknownBuiltin { name: String, valid: String },

    #[error("invalid polynomial: {0}")]
    PolyParse(String),

    #[error("empty polynomial has no leading form")]
    EmptyPoly,

    #[error("odd-degree homogeneous form (degree {0}) is never positive definite")]
    OddDegreeForm(usize),

    #[error("invalid certificate: {0}")]
    CertificateInvalid(String),

    #[error("certificate failure: {reason} (witness {witness})")]
    CertificateFailure { reason: String, witness: Witness },

    #[error("dissipativity failure: {reason} (witness {witness})")]
    DissipativityFailure { reason: String, witness: Witness },

    #[error("wrong friction variant: {0}")]
    WrongVariant(&'static str),

    #[error("missing derivative capability: {0}")]
    CapabilityMissing(&'static str),

    #[error("path blow-up at t={t} from {witness}")]
    BlowUp { t: f64, witness: Witness },

    #[error(
        "ensemble quality: {rejected} of {total} paths blew up (limit {limit_percent}%); \
         reduce the step size or switch to the tamed-euler scheme"
    )]
    EnsembleQuality {
        rejected: usize,
        total: usize,
        limit_percent: f64,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
