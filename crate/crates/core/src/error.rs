use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no lattice point of the domain survives discretization at eps = {eps}")]
    EmptyDomain { eps: f64 },

    #[error("dimension {d} is not supported here ({reason})")]
    DimensionUnsupported { d: usize, reason: &'static str },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("Laplacian system is singular (pivot {pivot} at row {row})")]
    SingularSystem { row: usize, pivot: f64 },

    #[error("point {point:?} is not a vertex of the discretized domain")]
    PointOutsideDomain { point: Vec<i64> },

    #[error("quadrature did not converge: last two refinements differ by {diff:e} (tolerance {tol:e})")]
    QuadratureNotConverged { diff: f64, tol: f64 },

    #[error("decay fit for the kernel tail is unusable (slope {slope:.3}, required <= {max_slope:.3})")]
    TailBoundUnavailable { slope: f64, max_slope: f64 },

    #[error("perfect matchings need an even number of elements, got {0}")]
    OddSize(usize),

    #[error("k = {k} exceeds the configured complexity budget of {max}")]
    ComplexityBudgetExceeded { k: usize, max: usize },

    #[error("continuum points must be pairwise distinct")]
    CoincidentPoints,

    #[error("point {point:?} lies outside the continuum domain")]
    OutsideDomain { point: Vec<f64> },

    #[error("point ({re}, {im}) lies outside the open unit disk")]
    OutsideDisk { re: f64, im: f64 },

    #[error("Cholesky factorization failed at row {row}")]
    FactorizationFailed { row: usize },

    #[error("test function support is {margin:.4} from the boundary, needs more than {required:.4}")]
    SupportTooClose { margin: f64, required: f64 },

    #[error("need at least {min} replicates, got {n}")]
    InsufficientReplicates { n: usize, min: usize },

    #[error("Richardson extrapolation is unstable: {0}")]
    ExtrapolationUnstable(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
