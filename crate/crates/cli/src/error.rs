use bathy_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] CoreError),
    #[error("checks failed: {}", .0.join(", "))]
    ChecksFailed(Vec<String>),
    #[error("certificate preconditions not met: {0}")]
    NonInformative(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(CoreError::Io(e))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    /// Process exit status:
    /// 1 failed checks or I/O, 2 bad config, 3 solver failure, 4 identical pair,
    /// 5 certificate preconditions, 6 infeasible initial bottom.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::ChecksFailed(_) => 1,
            CliError::NonInformative(_) => 5,
            CliError::Core(e) => match e {
                CoreError::InvalidGrid(_)
                | CoreError::InvalidField(_)
                | CoreError::GridMismatch
                | CoreError::DepthViolation { .. }
                | CoreError::LateralMismatch { .. }
                | CoreError::WindowOutsideDomain { .. }
                | CoreError::TimeOutOfRange { .. }
                | CoreError::InvalidParameter(_) => 2,
                CoreError::SolverDivergence { .. } | CoreError::LineSearchFailure { .. } => 3,
                CoreError::IdenticalPair => 4,
                CoreError::SurfaceGap { .. }
                | CoreError::SmallnessViolated { .. }
                | CoreError::PointTooNearBoundary { .. }
                | CoreError::ZeroEnergy
                | CoreError::NoComponents
                | CoreError::DegenerateComponent { .. }
                | CoreError::RegionOutsideDomain { .. }
                | CoreError::CurveOutsideDomain { .. } => 5,
                CoreError::InfeasibleInit(_) => 6,
                CoreError::Io(_) | CoreError::Csv(_) | CoreError::Json(_) => 1,
            },
        }
    }
}
