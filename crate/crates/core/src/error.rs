use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex id {id} out of range (mesh has {count} vertices)")]
    VertexOutOfRange { id: usize, count: usize },
    #[error("cell {cell} is degenerate (|det| = {det:e})")]
    DegenerateCell { cell: usize, det: f64 },
    #[error("face {face:?} is shared by more than two cells")]
    NonManifoldFace { face: [usize; 3] },
    #[error("cell {cell:?} appears more than once")]
    DuplicateCell { cell: [usize; 4] },
    #[error("simplex {0:?} is not part of the complex")]
    UnknownSimplex(Vec<usize>),
    #[error("face {face:?} selected for the constrained boundary is not a boundary face")]
    NotABoundaryFace { face: [usize; 3] },
    #[error("every boundary face of the extended star of cell {cell} is constrained")]
    GammaCoversPatchBoundary { cell: usize },
    #[error("constrained or free trace surface of the patch of {simplex:?} is not edge-connected")]
    NonConnectedTrace { simplex: Vec<usize> },
    #[error("patch of {simplex:?} fails the contractibility check (euler characteristic {euler}, {components} boundary components)")]
    NonContractiblePatch {
        simplex: Vec<usize>,
        euler: i64,
        components: usize,
    },
    #[error("polynomial degree {0} is not supported (only 0)")]
    UnsupportedDegree(usize),
    #[error("space specification is inconsistent: {0}")]
    LayerMismatch(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("form degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("integrand degree {requested} exceeds quadrature exactness {available}")]
    QuadratureUnderResolved { requested: usize, available: usize },
    #[error("exactness violated ({context}): expected kernel dimension {expected}, found {found}")]
    ExactnessViolation {
        context: String,
        expected: usize,
        found: usize,
    },
    #[error("target is not in the range of the operator (relative residual {residual:e})")]
    InconsistentTarget { residual: f64 },
    #[error("right-hand side does not annihilate the kernel (relative residual {residual:e})")]
    KernelResidual { residual: f64 },
    #[error("bordered system is singular")]
    SingularBordered,
    #[error("numerical breakdown in {context}: {detail}")]
    NumericalBreakdown { context: String, detail: String },
    #[error("cell {cell} has a non-positive jacobian determinant")]
    OrientationFlip { cell: usize },
    #[error("{0} is not supported")]
    NotSupported(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short stable identifier used in machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::VertexOutOfRange { .. } => "VertexOutOfRange",
            Error::DegenerateCell { .. } => "DegenerateCell",
            Error::NonManifoldFace { .. } => "NonManifoldFace",
            Error::DuplicateCell { .. } => "DuplicateCell",
            Error::UnknownSimplex(_) => "UnknownSimplex",
            Error::NotABoundaryFace { .. } => "NotABoundaryFace",
            Error::GammaCoversPatchBoundary { .. } => "GammaCoversPatchBoundary",
            Error::NonConnectedTrace { .. } => "NonConnectedTrace",
            Error::NonContractiblePatch { .. } => "NonContractiblePatch",
            Error::UnsupportedDegree(_) => "UnsupportedDegree",
            Error::LayerMismatch(_) => "LayerMismatch",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::DegreeMismatch { .. } => "DegreeMismatch",
            Error::QuadratureUnderResolved { .. } => "QuadratureUnderResolved",
            Error::ExactnessViolation { .. } => "ExactnessViolation",
            Error::InconsistentTarget { .. } => "InconsistentTarget",
            Error::KernelResidual { .. } => "KernelResidual",
            Error::SingularBordered => "SingularBordered",
            Error::NumericalBreakdown { .. } => "NumericalBreakdown",
            Error::OrientationFlip { .. } => "OrientationFlip",
            Error::NotSupported(_) => "NotSupported",
            Error::Parse { .. } => "Parse",
            Error::Io(_) => "Io",
        }
    }
}
