use thiserror::Error;

/// Sorted vertex-index pair identifying an edge.
pub type EdgeKey = (usize, usize);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("triangle {triangle} is degenerate (colinear vertices)")]
    DegenerateTriangle { triangle: usize },

    #[error("triangles {first} and {second} intersect improperly: {reason}")]
    ComplexViolation {
        first: usize,
        second: usize,
        reason: String,
    },

    #[error("triangles do not cover the domain: {reason}")]
    CoverageGap { reason: String },

    #[error("invalid mesh input: {0}")]
    InvalidInput(String),

    #[error("normals of the triangles adjacent to edge {edge:?} are antipodal")]
    FoldBack { edge: EdgeKey },

    #[error("edge {edge:?}: target normal is parallel to the edge, projection undefined")]
    DegenerateProjection { edge: EdgeKey },

    #[error("edge {edge:?}: director has negative product {product:e} with the normal of triangle {triangle}")]
    OrientationViolation {
        edge: EdgeKey,
        triangle: usize,
        product: f64,
    },

    #[error("edge {edge:?}: director violates the {family} constraints (residual {residual:e})")]
    ConstraintViolation {
        edge: EdgeKey,
        family: &'static str,
        residual: f64,
    },

    #[error("edge {edge:?}: flat triangle {triangle} has director deviating from its normal by {deviation:e}")]
    FlatMismatch {
        edge: EdgeKey,
        triangle: usize,
        deviation: f64,
    },

    #[error("quadrature order {order} is not available (supported 1..={max})")]
    QuadratureUnavailable { order: usize, max: usize },

    #[error("circumcenters of the triangles adjacent to edge {edge:?} coincide (distance {distance:e})")]
    DegenerateDual { edge: EdgeKey, distance: f64 },

    #[error("conjugate gradient did not reach tolerance after {iterations} iterations (residual {residual:e})")]
    SolverStall { iterations: usize, residual: f64 },

    #[error("point ({x}, {y}) lies outside the domain of surface `{surface}`")]
    OutOfDomain { surface: String, x: f64, y: f64 },

    #[error("integrand `{0}` does not satisfy the solver's requirements")]
    UnsupportedIntegrand(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
