use thiserror::Error;

/// Errors raised by geometry construction, field evaluation and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SwimError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("arms overlap: opening {opening:.6} rad leaves a gap of {gap:.3e} (minimum {min_gap:.3e})")]
    ArmsOverlap { opening: f64, gap: f64, min_gap: f64 },
    #[error("shape {value:.6} outside the admissible range [{lo:.6}, {hi:.6}]")]
    ShapeOutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("singular assembly: smallest eigenvalue {min_eig:.3e} below {threshold:.3e}")]
    SingularAssembly { min_eig: f64, threshold: f64 },
    #[error("incompatible Neumann data: loop {loop_index} carries net flux {flux:.3e}")]
    IncompatibleFlux { loop_index: usize, flux: f64 },
    #[error("ill-conditioned panel system: condition estimate {estimate:.3e}")]
    IllConditioned { estimate: f64 },
    #[error("non-finite field value at t = {t}, s = {s:?}, q = ({theta}, {x}, {y})")]
    NonFinite { t: f64, s: Vec<f64>, theta: f64, x: f64, y: f64 },
    #[error("swimmer within {gap:.3e} of the obstacle (limit {limit:.3e})")]
    Proximity { gap: f64, limit: f64 },
    #[error("undersampled circle path: increment {increment:.6} at sample {index} is not below pi")]
    Undersampled { index: usize, increment: f64 },
    #[error("cover analysis needs a single shape coordinate, got {0}")]
    MultiDof(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = SwimError> = std::result::Result<T, E>;
