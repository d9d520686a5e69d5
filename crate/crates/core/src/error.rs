use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point lies at the south pole, outside the stereographic chart")]
    SouthPoleSingularity,
    #[error("icosphere level {0} out of range (0..=8)")]
    LevelOutOfRange(usize),
    #[error("direction {0:?} is not a unit vector")]
    NonUnitDirection([f64; 3]),
    #[error("profile cannot be evaluated: {0}")]
    ProfileOutOfRange(String),
    #[error("epsilon {0} must lie in (0, 1/2)")]
    EpsilonOutOfRange(f64),
    #[error("matrix is not a proper rotation (orthogonality defect {defect:.3e}, det {det:.6})")]
    NotARotation { defect: f64, det: f64 },
    #[error("interpolated vector degenerate (norm {0:.3e})")]
    DegenerateBlend(f64),
    #[error("image of triangle {triangle} subtends solid angle {solid_angle:.4} > pi; field under-resolved")]
    IllConditionedTriangle { triangle: usize, solid_angle: f64 },
    #[error("frame field deviates from e3 at the outer radius (deviation {0:.3e})")]
    UnsupportedTail(f64),
    #[error("field is not equivariant (defect {0:.3e})")]
    NotEquivariant(f64),
    #[error("midpoint fixed-point iteration did not converge (residual {0:.3e})")]
    MidpointNoConvergence(f64),
    #[error("target |J0| = {0:.6} must exceed 4 pi")]
    TargetTooSmall(f64),
    #[error("elliptical distortion could not bracket |J0| = {0:.6} for s in (1, 3]")]
    TargetUnreachable(f64),
    #[error("topological charge left the Q = 0 sector (Q = {0:.4})")]
    TopologicalSectorChange(f64),
    #[error("iteration limit reached after {0} iterations")]
    MaxIterations(usize),
    #[error("J3 routes disagree: closed form {closed:.12}, direct {direct:.12}")]
    RouteMismatch { closed: f64, direct: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
