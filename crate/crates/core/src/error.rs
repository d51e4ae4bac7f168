use thiserror::Error;

use crate::twisted_euclid::EuclideanTranscript;

#[derive(Debug, Error)]
pub enum Error {
    #[error("quaternions belong to different algebras")]
    AlgebraMismatch,
    #[error("division by zero")]
    DivisionByZero,
    #[error("algebra parameters must be nonzero")]
    DegenerateAlgebra,
    #[error("involution element must be invertible with trace zero")]
    InvalidInvolution,
    #[error("generators span rank {0}, expected 4")]
    NotALattice(usize),
    #[error("lattice is not closed under multiplication")]
    NotARing,
    #[error("lattice does not contain 1")]
    MissingOne,
    #[error("indefinite algebras are not supported here")]
    IndefiniteUnsupported,
    #[error("order is not closed under the involution")]
    NotClosedUnderInvolution,
    #[error("form is not positive definite")]
    NotPositiveDefinite,
    #[error("divisor is zero")]
    ZeroDivisor,
    #[error("pair is not compatible: a*sigma(b) is not fixed by the involution")]
    NotCompatiblePair,
    #[error("norm did not decrease after {} division steps", .0.q_list.len())]
    StathmNotDecreased(Box<EuclideanTranscript>),
    #[error("pair is not coprime (gcd has norm {0})")]
    NotCoprime(String),
    #[error("matrix could not be reduced by the twisted Euclidean algorithm")]
    NotEuclideanReducible,
    #[error("bisector needs nrm(z) > 1")]
    DegenerateBisector,
    #[error("base point rejected: {0}")]
    BadBasePoint(String),
    #[error("base point height squared must exceed 2")]
    HeightTooLow,
    #[error("order is not norm-Euclidean (rho = {0})")]
    NotEuclideanOrder(String),
    #[error("reduction did not terminate within {0} steps")]
    NonTermination(usize),
    #[error("order does not have class number one")]
    ClassNumberNotOne,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
}

impl Error {
    /// Stable machine-readable code used by the CLI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::AlgebraMismatch => "algebra_mismatch",
            Error::DivisionByZero => "division_by_zero",
            Error::DegenerateAlgebra => "degenerate_algebra",
            Error::InvalidInvolution => "invalid_involution",
            Error::NotALattice(_) => "not_a_lattice",
            Error::NotARing => "not_a_ring",
            Error::MissingOne => "missing_one",
            Error::IndefiniteUnsupported => "indefinite_unsupported",
            Error::NotClosedUnderInvolution => "not_closed_under_involution",
            Error::NotPositiveDefinite => "not_positive_definite",
            Error::ZeroDivisor => "zero_divisor",
            Error::NotCompatiblePair => "not_compatible_pair",
            Error::StathmNotDecreased(_) => "stathm_not_decreased",
            Error::NotCoprime(_) => "not_coprime",
            Error::NotEuclideanReducible => "not_euclidean_reducible",
            Error::DegenerateBisector => "degenerate_bisector",
            Error::BadBasePoint(_) => "bad_base_point",
            Error::HeightTooLow => "height_too_low",
            Error::NotEuclideanOrder(_) => "not_euclidean_order",
            Error::NonTermination(_) => "non_termination",
            Error::ClassNumberNotOne => "class_number_not_one",
            Error::Parse(_) => "parse_error",
            Error::Validation(_) => "validation_error",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
