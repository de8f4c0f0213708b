use thiserror::Error;

pub type Result<T> = std::result::Result<T, PqrError>;

#[derive(Debug, Error)]
pub enum PqrError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("length mismatch: expected {expected} entries, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("memory guard: operation needs {requested} entries but the budget is {budget}")]
    MemoryBudget { requested: u128, budget: usize },

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("Schur iteration did not converge within {max_iter} iterations")]
    SchurNoConvergence { max_iter: usize },

    #[error(
        "eigenvalue-sum near zero: pivot magnitude {magnitude:e} is below {threshold:e} \
         (eigenvalues reflected across the imaginary axis)"
    )]
    EigenvalueSumNearZero { magnitude: f64, threshold: f64 },

    #[error("non-real solution: imaginary part norm {imag:e} exceeds {limit:e}")]
    NonRealSolution { imag: f64, limit: f64 },

    #[error("unstabilizable pair: {0}")]
    Unstabilizable(String),

    #[error("refinement stagnation: Riccati residual {residual:e} above target {target:e}")]
    RefinementStagnation { residual: f64, target: f64 },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("missing coefficient: {0}")]
    MissingCoefficient(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
