//! Construction and verification of non-linear pseudo-boson families.
//!
//! A family is a triple `(a, b, eps)` together with the two vector ladders
//! `Phi_n = b^n Phi_0 / sqrt(eps_n!)` and `eta_n = (a^+)^n eta_0 / sqrt(eps_n!)`.
//! Families are built either from the vacua of `a` and `b^+` or by conjugating
//! an orthonormal ladder with a positive operator. The verification battery
//! then measures every defining identity on the interior indices
//! `n <= depth - margin`, where truncation cannot reach.

mod family;
mod metric;
mod riesz;
mod verify;

pub use family::{build_by_similarity, build_from_vacua, fock_basis, NlpbFamily};
pub use metric::{
    check_intertwining, check_metric_duality, frame_operators, rebuild_residual, theorem1_roundtrip,
    IntertwiningResiduals, InteriorMetric, RoundTrip,
};
pub use riesz::{riesz_diagnostic, RegularVerdict, RieszDiagnostic, RieszLevel};
pub use verify::{commutator_eigenvalues, verify_family, CheckResult, CheckTolerances, VerificationReport};

use crate::operator::OperatorError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("no vacuum: smallest singular value of {operator} is {sigma:e} > {tolerance:e}")]
    NoVacuum {
        operator: &'static str,
        sigma: f64,
        tolerance: f64,
    },
    #[error("degenerate vacuum: {operator} has at least two singular values below {tolerance:e}")]
    DegenerateVacuum {
        operator: &'static str,
        tolerance: f64,
    },
    #[error("vacua are orthogonal (|<Phi_0, eta_0>| = {0:e}); cannot normalize the pair")]
    ZeroOverlap(f64),
    #[error("similarity operator is numerically singular: {0}")]
    SingularT(String),
    #[error("ladder contract violated: {0}")]
    LadderMismatch(String),
    #[error("invalid ladder depth: {0}")]
    InvalidDepth(String),
}

/// `||lhs - rhs||` relative to the larger of the two sides, floored by the
/// norm of the input vector so annihilated vectors still get an absolute scale.
pub(crate) fn relative_residual(
    lhs: &crate::operator::StateVector,
    rhs: &crate::operator::StateVector,
    input: &crate::operator::StateVector,
) -> f64 {
    let diff = lhs.sub(rhs).norm();
    let scale = lhs.norm().max(rhs.norm()).max(input.norm());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}
