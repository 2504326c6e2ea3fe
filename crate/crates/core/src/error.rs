use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("grids do not match")]
    GridMismatch,
    #[error("depth {depth} at x = {x} is below the minimum depth {h0}")]
    DepthViolation { depth: f64, h0: f64, x: f64 },
    #[error("linear solve did not reach tolerance: relative residual {residual:e} > {tol:e}")]
    SolverDivergence { residual: f64, tol: f64 },
    #[error("lateral trace has length {got}, expected {expected}")]
    LateralMismatch { got: usize, expected: usize },
    #[error("region exits the solved domain at x = {x}")]
    RegionOutsideDomain { x: f64 },
    #[error("curve exits the solved domain at x = {x} (sigma = {sigma})")]
    CurveOutsideDomain { x: f64, sigma: f64 },
    #[error("component area {area:e} is below the quadrature floor")]
    DegenerateComponent { area: f64 },
    #[error("time {t0} outside trajectory span [{start}, {end}]")]
    TimeOutOfRange { t0: f64, start: f64, end: f64 },
    #[error("window [{a1}, {a2}] is not aligned with or contained in the simulation grid")]
    WindowOutsideDomain { a1: f64, a2: f64 },
    #[error("surfaces differ by {gap} > {limit} (half the minimum depth)")]
    SurfaceGap { gap: f64, limit: f64 },
    #[error("the two configurations coincide")]
    IdenticalPair,
    #[error("smallness precondition failed: {lhs:e} > {rhs:e}")]
    SmallnessViolated { lhs: f64, rhs: f64 },
    #[error("sample point ({x}, {y}) is within 4*rho of the boundary")]
    PointTooNearBoundary { x: f64, y: f64 },
    #[error("potential has zero energy")]
    ZeroEnergy,
    #[error("bottoms coincide; no inter-bottom components")]
    NoComponents,
    #[error("initial bottom is infeasible: {0}")]
    InfeasibleInit(String),
    #[error("line search failed after {iterations} iterations (misfit {misfit:e})")]
    LineSearchFailure {
        iterations: usize,
        misfit: f64,
        last: Box<crate::inversion::InversionResult>,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
