use thiserror::Error;

/// Every failure the library can report.
///
/// Verdict-type outcomes (an infeasible certificate, an inconclusive test)
/// are not errors; they are carried in the corresponding report types.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("delays must start at 0 and be strictly increasing (or all be 0): {0}")]
    DelayOrderViolation(String),
    #[error("initial condition mismatch: {0}")]
    EndpointMismatch(String),
    #[error("fractional order must be positive, got {0}")]
    NonPositiveOrder(f64),
    #[error("time function table is empty")]
    EmptyTable,
    #[error("table sample times must be strictly increasing")]
    UnsortedTable,
    #[error("declared sup-norm {declared} is exceeded by a sample of norm {observed}")]
    DeclaredBoundViolated { declared: f64, observed: f64 },
    #[error("window [{start}, {end}] is not covered by the table range [{first}, {last}]")]
    WindowOutOfRange {
        start: f64,
        end: f64,
        first: f64,
        last: f64,
    },
    #[error("gamma function has a pole at {0}")]
    PoleAtNonpositiveInteger(f64),
    #[error("gamma({0}) overflows f64")]
    OverflowBeyondRepresentableRange(f64),
    #[error(
        "Mittag-Leffler evaluation did not converge (alpha={alpha}, beta={beta}, |z|={modulus})"
    )]
    SeriesNotConverged { alpha: f64, beta: f64, modulus: f64 },
    #[error("Phi_alpha is singular at t = 0 for alpha < 1")]
    SingularAtZero,
    #[error("quadrature did not converge: last two refinements differ by {0:e}")]
    QuadratureNotConverged(f64),
    #[error("matrix is not a stability matrix (spectral abscissa {0})")]
    NotAStabilityMatrix(f64),
    #[error("node correction diverged at t = {0}")]
    NodeCorrectionDiverged(f64),
    #[error("all delays must be zero for the delay-free form")]
    DelaysNotZero,
    #[error("kernel is not integrable on the half line: {0}")]
    KernelNotIntegrable(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("delta grid is empty")]
    EmptyGrid,
    #[error("premise violated: {0}")]
    PremiseViolated(String),
    #[error("order {0} is below 2")]
    OrderTooLow(f64),
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("matrix is defective and no transformation was supplied")]
    DefectiveMatrixNoTransform,
    #[error("eigenvalue at the origin has no fractional power branch")]
    EigenvalueAtOrigin,
    #[error("all blocks are zero")]
    AllBlocksZero,
    #[error("problem file: {0}")]
    ConfigParse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
