use alloc::string::String;

/// Errors raised anywhere in the numerical pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("curves overlap: {0}")]
    OverlappingCurves(String),
    #[error("puncture {index} at ({x}, {y}) is not strictly inside the domain")]
    PunctureOutsideDomain { index: usize, x: f64, y: f64 },
    #[error("degenerate curve {component}: {reason}")]
    DegenerateCurve { component: usize, reason: String },
    #[error("invalid puncture set: {0}")]
    InvalidPunctures(String),
    #[error("rho = {rho} is not below rho_max = {rho_max}")]
    RhoTooLarge { rho: f64, rho_max: f64 },
    #[error("rho = {rho} is below the conditioning guard {min}")]
    RhoTooSmall { rho: f64, min: f64 },
    #[error("boundary component index {0} out of range")]
    BadComponentIndex(usize),
    #[error("degree of component {component} is not an integer (residual {residual:e})")]
    NonIntegerDegree { component: usize, residual: f64 },
    #[error("boundary data has {got} components, the domain has {expected}")]
    ComponentCountMismatch { expected: usize, got: usize },
    #[error("degree relation fails: deg(g, outer) = {outer} but sum d_i + sum deg(g, holes) = {sum_punctures} + {sum_holes}")]
    IncompatibleDegrees { outer: i64, sum_punctures: i64, sum_holes: i64 },
    #[error("Neumann data incompatible: total flux {flux} but sources require {required}")]
    IncompatibleNeumannData { flux: f64, required: f64 },
    #[error("problem is under-determined: {0}")]
    UnderDeterminedProblem(String),
    #[error("problem is over-determined: {0}")]
    OverDeterminedProblem(String),
    #[error("discretized system is singular (pivot {pivot:e}); increase the node count")]
    SolverSingular { pivot: f64 },
    #[error("point ({x}, {y}) lies within the near-boundary band h = {band}")]
    TooCloseToBoundary { x: f64, y: f64, band: f64 },
    #[error("no source with index {0}")]
    NoSuchSource(usize),
    #[error("path passes too close to a singularity or boundary: {0}")]
    PathTooCloseToSingularity(String),
    #[error("period matrix is not symmetric: max |P_lm - P_ml| = {asymmetry:e}")]
    AsymmetricPeriodMatrix { asymmetry: f64 },
    #[error("lattice search radius {radius} insufficient to certify the minimum")]
    SearchRadiusInsufficient { radius: usize },
    #[error("boundary data degrees do not match the configuration: {0}")]
    DegreeMismatch(String),
    #[error("deflated sequence not monotone at step {step}: {prev} -> {next}")]
    NonMonotoneSequence { step: usize, prev: f64, next: f64 },
    #[error("fitted convergence order {order} below the accepted minimum {min}")]
    ConvergenceOrderMismatch { order: f64, min: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
