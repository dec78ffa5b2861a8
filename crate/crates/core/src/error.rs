use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by drivers to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Geometry,
    Solver,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("material is not positive definite: {violated}")]
    NotPositiveDefinite { violated: String },

    #[error("field evaluated at ({x}, {y}), inside the exclusion radius of the dislocation at ({cx}, {cy})")]
    EvalAtCore { x: f64, y: f64, cx: f64, cy: f64 },

    #[error("loop passes within the exclusion radius of the dislocation at ({cx}, {cy})")]
    LoopThroughCore { cx: f64, cy: f64 },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("edge ({0}, {1}) is not a tagged boundary edge")]
    NotBoundary(usize, usize),

    #[error("integrand is not finite at ({x}, {y})")]
    NonFiniteIntegrand { x: f64, y: f64 },

    #[error("incompatible Neumann data: net flux {net:e} exceeds {allowed:e}")]
    IncompatibleFlux { net: f64, allowed: f64 },

    #[error("conjugate gradient stalled after {iterations} iterations (relative residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("bad radii: need 0 < eps < r, got eps = {eps}, r = {r}")]
    BadRadii { eps: f64, r: f64 },

    #[error("bad cutoff radius {r}: must be below {limit}")]
    BadCutoff { r: f64, limit: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("bad contour radius {r}: must be below {limit}")]
    BadContour { r: f64, limit: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("mesh file parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::NotPositiveDefinite { .. }
            | Error::Config(_)
            | Error::Json(_)
            | Error::BadRadii { .. }
            | Error::BadCutoff { .. }
            | Error::BadContour { .. }
            | Error::DegenerateFit(_)
            | Error::Parse { .. }
            | Error::Io(_) => ErrorClass::Config,
            Error::Geometry(_) | Error::Mesh(_) | Error::NotBoundary(..) => ErrorClass::Geometry,
            Error::EvalAtCore { .. }
            | Error::LoopThroughCore { .. }
            | Error::NonFiniteIntegrand { .. }
            | Error::IncompatibleFlux { .. }
            | Error::SolverDiverged { .. } => ErrorClass::Solver,
        }
    }

    /// Short machine-readable identifier.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::EvalAtCore { .. } => "EvalAtCore",
            Error::LoopThroughCore { .. } => "LoopThroughCore",
            Error::Geometry(_) => "GeometryError",
            Error::Mesh(_) => "MeshError",
            Error::NotBoundary(..) => "NotBoundary",
            Error::NonFiniteIntegrand { .. } => "NonFiniteIntegrand",
            Error::IncompatibleFlux { .. } => "IncompatibleFlux",
            Error::SolverDiverged { .. } => "SolverDiverged",
            Error::BadRadii { .. } => "BadRadii",
            Error::BadCutoff { .. } => "BadCutoff",
            Error::DegenerateFit(_) => "DegenerateFit",
            Error::BadContour { .. } => "BadContour",
            Error::Config(_) => "ConfigInvalid",
            Error::Parse { .. } => "ParseError",
            Error::Io(_) => "IoError",
            Error::Json(_) => "JsonError",
        }
    }
}
