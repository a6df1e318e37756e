use thiserror::Error;

/// Errors surfaced by the numerical kernels.
///
/// Variants are named after the contract they enforce; most carry enough
/// context to reconstruct which precondition failed.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: defect {defect:.3e} exceeds {tol:.3e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("eigensolver failed to converge (dim {dim})")]
    ConvergenceFailure { dim: usize },

    #[error("functional calculus: f(lambda_{index}) = f({lambda}) is not finite")]
    DomainError { index: usize, lambda: f64 },

    #[error("overflow risk: |Im z| * spectral radius = {exponent:.3e} exceeds {limit:.3e}")]
    OverflowRisk { exponent: f64, limit: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point {point} is not on the contour (distance {distance:.3e})")]
    NotOnContour { point: num_complex::Complex64, distance: f64 },

    #[error("integrand is not finite at contour node {node}")]
    NonFiniteIntegrand { node: num_complex::Complex64 },

    #[error("insertion {value} outside (-T, T) with T = {t_half}")]
    InsertionOutOfRange { value: f64, t_half: f64 },

    #[error("contour is not simple: segments {first} and {second} intersect")]
    NotSimple { first: usize, second: usize },

    #[error("degenerate contour: consecutive vertices coincide at index {index}")]
    DegenerateSegment { index: usize },

    #[error("half-plane violation: Im z = {im_z} > Im z' = {im_zp}")]
    HalfPlaneViolation { im_z: f64, im_zp: f64 },

    #[error("Dyson series not truncated after {n_max} terms (tail bound {tail:.3e} > tol {tol:.3e})")]
    TruncationFailure { n_max: usize, tail: f64, tol: f64 },

    #[error("quadrature self-check failed: q vs 2q deviation {deviation:.3e} > {tol:.3e}")]
    QuadratureNotConverged { deviation: f64, tol: f64 },

    #[error("coincident insertion points at contour parameter {parameter}")]
    CoincidentInsertions { parameter: f64 },

    #[error("no finite spectral shift certifies this operator")]
    NoFiniteShift,

    #[error("ground state is degenerate: gap {gap:.3e} <= tol {tol:.3e}")]
    DegenerateGroundState { gap: f64, tol: f64 },

    #[error("ground state overlap with the free vacuum vanishes: |overlap| {overlap:.3e} <= tol {tol:.3e}")]
    VanishingOverlap { overlap: f64, tol: f64 },

    #[error("Gell-Mann-Low denominator too small: |den| = {denominator:.3e}")]
    SmallDenominator { denominator: f64 },

    #[error("duplicate momentum in mode set at indices {first} and {second}")]
    ModeCollision { first: usize, second: usize },

    #[error("photon momentum {index} below k_min: |k| = {norm:.3e} < {k_min:.3e}")]
    ZeroMode { index: usize, norm: f64, k_min: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
