use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("material breakpoint {breakpoint} is missing from the x-partition of slab {slab}")]
    NonconformingMaterial { slab: usize, breakpoint: f64 },

    #[error("x-partition of slab {slab} has no cells")]
    EmptyPartition { slab: usize },

    #[error("non-positive extent: {0}")]
    NegativeExtent(String),

    #[error("partitions do not cover the same interval: ({a0}, {a1}) vs ({b0}, {b1})")]
    MismatchedDomain { a0: f64, a1: f64, b0: f64, b1: f64 },

    #[error("a quadrature rule needs at least one point")]
    ZeroPoints,

    #[error("degenerate segment ({a}, {b})")]
    DegenerateSegment { a: f64, b: f64 },

    #[error("point ({x}, {t}) lies outside element {element}")]
    PointOutsideElement { element: usize, x: f64, t: f64 },

    #[error("the Trefftz space only supports the homogeneous problem (no source term)")]
    TrefftzWithSource,

    #[error("slab {slab} system matrix is numerically singular (pivot ratio {pivot_ratio:e})")]
    SingularSlabMatrix { slab: usize, pivot_ratio: f64 },

    #[error("{points} quadrature points cannot integrate degree {degree} exactly")]
    QuadratureOrderTooLow { points: usize, degree: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("update matrix needs identical slabs: {0}")]
    InhomogeneousSlabs(String),

    #[error("eigensolver failed: {0}")]
    EigensolverFailure(String),

    #[error("exact reference needs constant material coefficients")]
    NonconstantMaterial,

    #[error("t = {t} lies on a slab interface; a trace side must be given")]
    AmbiguousTrace { t: f64 },

    #[error("unsupported boundary condition: {0}")]
    UnsupportedBc(String),

    #[error("rate fit needs at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("rate fit needs positive errors, got {0}")]
    NonpositiveError(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
