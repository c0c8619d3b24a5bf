use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("g^00 vanishes at t = {t}, x = {x:?} (g^00 = {g00:e})")]
    SingularLapse { t: f64, x: [f64; 3], g00: f64 },
    #[error("induced spatial metric is not positive definite at x = {x:?}")]
    NonPositiveMetric { x: [f64; 3] },
    #[error("measure must be positive on the grid, got {value} at rho = {rho}")]
    NonPositiveMeasure { rho: f64, value: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("coefficient {coefficient} depends on {coordinate}; sector separation is not valid")]
    NotSeparable { coefficient: &'static str, coordinate: &'static str },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vectors live on different grids")]
    GridMismatch,
    #[error("decomposition parameter q must be non-zero")]
    ZeroParameter,
    #[error("q = {re} + {im}i is not purely imaginary")]
    NotImaginary { re: f64, im: f64 },
    #[error("metric matrix h is not Hermitian")]
    NotHermitian,
    #[error("leading pencil coefficient is numerically singular (condition number {condition:e})")]
    SingularLeading { condition: f64 },
    #[error("eigensolver failed: {0}")]
    Eigensolver(String),
    #[error("no eigenpair passed the residual filter")]
    NoModes,
    #[error("level crossing at step {step}: overlaps {best:.4} and {second:.4} are within the ambiguity margin")]
    LevelCrossing { step: usize, best: f64, second: f64 },
    #[error("mode index {index} out of range ({len} modes)")]
    ModeIndex { index: usize, len: usize },
    #[error("state is not normalized (norm^2 = {norm_sq})")]
    NotNormalized { norm_sq: f64 },
    #[error("frame is not orthonormal (deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },
    #[error("parameter path is not closed (endpoint gap {gap:e})")]
    OpenPath { gap: f64 },
    #[error("sample grid must be strictly increasing with at least {min} points")]
    BadSamples { min: usize },
    #[error("integrator step size underflow at t = {t} (h = {h:e}); the problem looks stiff")]
    StepUnderflow { t: f64, h: f64 },
    #[error("integrator exceeded {steps} steps before t = {t}")]
    TooManySteps { t: f64, steps: usize },
    #[error("state at sample {index} has zero norm")]
    ZeroNorm { index: usize },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("{branch} phase is singular: |{branch}(eta)| = {value:e} at the {endpoint} point")]
    SingularPhase { branch: &'static str, endpoint: &'static str, value: f64 },
    #[error("phase ratio lies on the logarithm branch cut")]
    BranchCut,
    #[error("phase jump of {jump:.3} rad between consecutive samples {index} and {next}")]
    PhaseJump { index: usize, next: usize, jump: f64 },
    #[error("initial phase difference {given} disagrees with alpha+(0) - alpha-(0) = {expected}")]
    InconsistentInitialPhase { given: f64, expected: f64 },
    #[error("rotation path reaches the south pole at sample {index}")]
    AxisCrossing { index: usize },
    #[error("grid reaches the causality-violating region rho <= {limit}")]
    ClosedTimelikeRegion { limit: f64 },
    #[error("no sign change bracketing a root of {0}")]
    NoBracket(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
