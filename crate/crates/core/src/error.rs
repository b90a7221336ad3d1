use nalgebra::DVector;

use crate::family::FamilyKind;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{family} family is undefined at u = {u}")]
    Domain { family: FamilyKind, u: f64 },

    #[error("operation `{op}` is not supported for the {family} family")]
    UnsupportedFamily {
        family: FamilyKind,
        op: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("parameter is infeasible: x^T theta = {u} lies outside the family domain")]
    Infeasible { u: f64 },

    #[error(
        "Newton solver did not converge after {iterations} iterations (grad norm {grad_norm:.3e})"
    )]
    NonConvergence {
        theta: DVector<f64>,
        grad_norm: f64,
        iterations: usize,
    },

    #[error("arm set is empty")]
    EmptyArmSet,

    #[error("no arm is feasible under the sampled parameter")]
    AllInfeasible,

    #[error("arm set does not span R^{dim}")]
    NonSpanning { dim: usize },

    #[error("iteration budget of {budget} exhausted (reached {reached:.6}, target {target:.6})")]
    BudgetExhausted {
        budget: usize,
        reached: f64,
        target: f64,
    },

    #[error("arm index {index} out of range for {len} arms")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
