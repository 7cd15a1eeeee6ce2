use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HexError {
    #[error("non-positive Jacobian {jac:.3e} at reference point {at:?}")]
    NonPositiveJacobian { jac: f64, at: [f64; 3] },
    #[error("face {face} is not flat (relative deviation {deviation:.3e})")]
    NonFlatFace { face: usize, deviation: f64 },
    #[error(
        "inverse map did not converge after {iterations} iterations (residual {residual:.3e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("degenerate element: {0}")]
    DegenerateElement(String),
    #[error("rank deficiency: {reason}; singular values {singular_values:?}")]
    RankDeficiency {
        reason: String,
        singular_values: Vec<f64>,
    },
    #[error("degenerate corner at x_024: edge vectors are linearly dependent")]
    DegenerateCorner,
    #[error("C∘H matrix is numerically singular (relative determinant {rel_det:.3e})")]
    SingularCnuMatrix { rel_det: f64 },
    #[error("no admissible (s, t) for non-symmetric supplements (max |d| = {max_d:.3e})")]
    SupplementSelectionFailed { max_d: f64 },
    #[error("DOF matrix is singular (condition estimate {cond:.3e})")]
    SingularDofMatrix { cond: f64 },
    #[error("mesh subdivision n = {0} must be even")]
    OddSubdivision(usize),
    #[error("non-conforming mesh: {0}")]
    NonConforming(String),
    #[error("element {cell} failed to build: {source}")]
    ElementBuildFailure { cell: usize, source: Box<HexError> },
    #[error("quadrature degree {have} is below the required {need}")]
    QuadratureOrderTooLow { have: u32, need: u32 },
    #[error(
        "solver did not converge in {iterations} iterations (relative residual {residual:.3e})"
    )]
    SolverDivergence { iterations: usize, residual: f64 },
    #[error("local block of element {cell} is singular")]
    SingularLocalBlock { cell: usize },
}

pub type Result<T> = std::result::Result<T, HexError>;
