use thiserror::Error;

/// Failures reported by the library. Variant names follow the failure
/// conditions documented on each operation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("nesting violation: {0}")]
    NestingViolation(String),
    #[error("layer {0} is disconnected")]
    DisconnectedLayer(usize),
    #[error("flat portion {index} too small: side {side} < r0/3 = {min}")]
    PortionTooSmall { index: usize, side: f64, min: f64 },
    #[error("grid misaligned: {0}")]
    GridMisaligned(String),
    #[error("point {0:?} lies outside the domain")]
    OutsideDomain([f64; 3]),
    #[error("slab too thin: depth {depth} < r0 = {r0}")]
    SlabTooThin { depth: f64, r0: f64 },
    #[error("slab footprint mismatch: {0}")]
    FootprintMismatch(String),
    #[error("offset {offset} out of range (|r| must be < {limit})")]
    OffsetOutOfRange { offset: f64, limit: f64 },
    #[error("point {point:?} is not in the closure of layer {layer}")]
    LayerMismatch { point: [f64; 3], layer: usize },
    #[error("admittivities use different anisotropy fields")]
    AnisotropyMismatch,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("resolution incompatible: {0}")]
    ResolutionIncompatible(String),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("tolerance not met: relative residual {residual:e} > {tol:e}")]
    ToleranceNotMet { residual: f64, tol: f64 },
    #[error("field is not a solution: relative residual {0:e}")]
    NotASolution(f64),
    #[error("coincident points")]
    CoincidentPoints,
    #[error("matrix is not symmetric positive definite")]
    NotSpd,
    #[error("point lies on the frozen interface")]
    OnInterface,
    #[error("pole {0:?} outside the admissible pole region")]
    PoleOutsideRegion([f64; 3]),
    #[error("ladder too fine: r = {r} below resolution floor {floor}")]
    LadderTooFine { r: f64, floor: f64 },
    #[error("eigen solve failed: {0}")]
    EigSolveFailure(String),
    #[error("gram mismatch: {0}")]
    GramMismatch(String),
    #[error("boundary data not in the trace space: {0}")]
    UnsupportedTrace(String),
    #[error("pole too close to the integration region: distance {dist} < {min}")]
    PoleTooClose { dist: f64, min: f64 },
    #[error("pole grid outside the pole region")]
    GridOutsidePoleRegion,
    #[error("radii must satisfy 0 < r1 < r2 < r3")]
    RadiiOrdering,
    #[error("ball exceeds the domain of the field")]
    BallOutsideDomain,
    #[error("sampling exhausted after {0} rejections")]
    SamplingExhausted(usize),
    #[error("parse error: {0}")]
    ParseError(String),
    #[error("validation error: {0}")]
    ValidationError(String),
    #[error("io error: {0}")]
    IoError(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::IoError(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
