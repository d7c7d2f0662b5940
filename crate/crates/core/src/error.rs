use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("duplicate system label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown system label `{0}`")]
    UnknownLabel(String),
    #[error("bad permutation: {0}")]
    BadPermutation(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("operator is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },
    #[error("dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("Kraus operators are not trace preserving (residual {residual:e})")]
    NotTracePreserving { residual: f64 },
    #[error("not a density matrix: {0}")]
    NotAState(String),
    #[error("normalization violated at level {level} (residual {residual:e})")]
    NormalizationViolation { level: usize, residual: f64 },
    #[error("operator is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },
    #[error("tester outcomes do not match the problem labels: {0}")]
    OutcomeMismatch(String),
    #[error("negative payoff g({row},{col}) = {value}; apply a payoff shift first")]
    NegativePayoff { row: usize, col: usize, value: f64 },
    #[error("invalid estimation problem: {0}")]
    InvalidProblem(String),
    #[error("invalid comb certificate: {0}")]
    InvalidComb(String),
    #[error("solver hit the iteration limit ({iterations}) with relative gap {gap:e}")]
    MaxIterations { iterations: usize, gap: f64 },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("payoff is not left-invariant: g({xhat},{x}) != g({yxhat},{yx})")]
    NotLeftInvariant {
        xhat: String,
        x: String,
        yxhat: String,
        yx: String,
    },
    #[error("problem is not covariant under the group action: {0}")]
    NotCovariant(String),
    #[error("invalid group action: {0}")]
    InvalidGroup(String),
    #[error("bad dimension: {0}")]
    BadDimension(String),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("payoff is not of product form: {0}")]
    NonProductPayoff(String),
    #[error("operator has non-finite entries")]
    NonFinite,
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
