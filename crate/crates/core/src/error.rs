use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("singular lattice basis (|det| = {det:e})")]
    SingularBasis { det: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("duplicate position {0}")]
    DuplicatePosition(String),

    #[error("motif offset {0:?} lies outside the fundamental cell of the lattice")]
    MotifOutsideCell(Vec<f64>),

    #[error("point {0} is not a lattice point of the given lattice inside the region")]
    NotInLattice(String),

    #[error("symbol '{0}' is not in the alphabet")]
    UnknownSymbol(char),

    #[error("displacement cutoff {z_max} exceeds the region diameter {limit}")]
    CutoffTooLarge { z_max: f64, limit: f64 },

    #[error("incompatible exact algebras: {0}")]
    IncompatibleAlgebra(String),

    #[error("incompatible normalizations: {0} vs {1}")]
    IncompatibleNormalization(String, String),

    #[error("no comparable displacements for almost-period candidate {0}")]
    EmptyComparableRange(String),

    #[error("cutoff {z_max} is below the point-set diameter {diameter}; exact Wiener-Khinchin mode needs the full difference set")]
    InsufficientCutoff { z_max: f64, diameter: f64 },

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("need at least {needed} {what}, got {got}")]
    TooFew { what: &'static str, needed: usize, got: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
