use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("target degree {target} is below source degree {source_degree}")]
    DegreeTooLow { source_degree: usize, target: usize },
    #[error("degree {0} exceeds the supported cap")]
    DegreeCap(usize),
    #[error("coefficient count {got} does not match {expected} for the declared shape")]
    CoeffCount { expected: usize, got: usize },
    #[error("degenerate rectangle: lo must be strictly below hi in every dimension")]
    DegenerateRect,
    #[error("subdivision factor must be at least 1")]
    ZeroSubdivision,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("noise moments missing: order {needed} requested, {available} available")]
    MissingMoments { needed: usize, available: usize },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("constraint budget {budget} is below the root node's {required} constraints")]
    BudgetTooSmall { budget: usize, required: usize },
    #[error("rectangle not found in any region family")]
    RectNotFound,
    #[error("constraint kind mismatch")]
    KindMismatch,
    #[error("LP infeasible")]
    Infeasible,
    #[error("LP unbounded")]
    Unbounded,
    #[error("solver failure: {0}")]
    Solver(String),
}
