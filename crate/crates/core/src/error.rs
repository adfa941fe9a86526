use thiserror::Error;

/// Errors raised by scattering, spectrum and reconstruction routines.
///
/// Numeric payloads are stored as `f64` regardless of the scalar type so the
/// error stays `'static` and printable.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("block with zero depth is transparent; its transition matrix is the identity")]
    TransparentBlock,

    #[error("invalid block: {0}")]
    InvalidBlock(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("k = {re}{im:+}i is a pole of block {block} (numbered from the right, 1-based)")]
    BlockPole { block: usize, re: f64, im: f64 },

    #[error("recursion denominator vanished when adding block {level} at k = {re}{im:+}i")]
    RecursionPole { level: usize, re: f64, im: f64 },

    #[error("kappa = {kappa} is not a bound state of a block of depth root {depth_root}")]
    InvalidBoundState { kappa: f64, depth_root: f64 },

    #[error("kappa = {kappa} is an exceptional point; the residue path is invalid there")]
    ExceptionalPoint { kappa: f64 },

    #[error("non-simple or mislocated pole at kappa = {kappa} (|q'| = {dq_abs:e}, |p| = {p_abs:e})")]
    NonSimplePole { kappa: f64, dq_abs: f64, p_abs: f64 },

    #[error("norming constant at kappa = {kappa} is not real positive: {re}{im:+}i")]
    InvalidNorming { kappa: f64, re: f64, im: f64 },

    #[error("derivative of a(k) vanished at kappa = {kappa}")]
    VanishingDerivative { kappa: f64 },

    #[error("bound states {first} and {second} coincide; phase constant undefined")]
    CoincidentKappas { first: f64, second: f64 },

    #[error("ln det(I + C) undefined at x = {x}: factorization broke down")]
    DeterminantBreakdown { x: f64 },

    #[error("length {len} is not a power of two")]
    NotPowerOfTwo { len: usize },

    #[error("profile is positive at x = {x} (v = {v})")]
    PositiveProfile { x: f64, v: f64 },

    #[error("k = 0 makes the retrieval matrix singular")]
    SingularRetrieval,

    #[error("solution blew up: {0}")]
    BlowUp(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("profile input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
