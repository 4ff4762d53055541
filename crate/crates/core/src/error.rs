use thiserror::Error;

/// Everything that can go wrong in a computation.
///
/// Variants fall in three groups that the CLI maps onto exit codes:
/// precondition violations, convergence failures and internal/IO errors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported sphere dimension {0} (supported: 1..=3)")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("parameter point has norm {0} > 1")]
    OutOfBall(f64),
    #[error("target value is within {distance:.3e} of the image of the boundary (tolerance {tolerance:.1e})")]
    BoundaryHit { distance: f64, tolerance: f64 },
    #[error("preimage {point:?} has |J| = {jacobian:.3e} below 1e-8; perturb the target value")]
    SingularPreimage { point: Vec<f64>, jacobian: f64 },
    #[error("projected image simplex {0} is degenerate and the direction lies on it")]
    DegenerateSimplex(usize),
    #[error("vertex {0} is mapped to (numerically) zero")]
    ZeroVertex(usize),
    #[error("map value has norm {0:.3e} below 1e-8 on the sphere")]
    NearZero(f64),
    #[error("result did not converge: residual {residual:.3e} >= {threshold}")]
    NotConverged { residual: f64, threshold: f64 },
    #[error("images intersect: separation {0:.3e} <= 1e-6")]
    ImagesIntersect(f64),
    #[error("subdomain contains no lattice nodes")]
    EmptySubdomain,
    #[error("requested region leaves the domain: {0}")]
    OutOfDomain(String),
    #[error("supplied inverse fails the identity check: error {0:.3e}")]
    NotInverse(f64),
    #[error("evaluation window is empty for the largest level t = {0}")]
    WindowEmpty(f64),
    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// True for errors caused by inputs that violate an operation's preconditions.
    pub fn is_precondition(&self) -> bool {
        !matches!(self, Error::NotConverged { .. } | Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
