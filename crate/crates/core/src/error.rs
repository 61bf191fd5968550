use std::io;

use thiserror::Error;

use crate::subcritical::SubcriticalSolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {n} is out of range (need n >= {min})")]
    InvalidDimension { n: usize, min: usize },

    #[error("resolution {res} is invalid (need an even value >= 4)")]
    InvalidResolution { res: usize },

    #[error("grid with {points} points exceeds the configured cap of {cap}")]
    GridTooLarge { points: u128, cap: usize },

    #[error("field length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("poisson right-hand side has mean {mean:e}, above tolerance {tol:e}")]
    NonSolvable { mean: f64, tol: f64 },

    #[error("curvature function is identically zero (the null Yamabe case)")]
    ZeroCurvature,

    #[error("curvature function is not admissible (mean {mean_f:e}, max {max_f:e})")]
    NotAdmissible { mean_f: f64, max_f: f64 },

    #[error("max f = {max_f:e} is not positive")]
    NonPositiveMax { max_f: f64 },

    #[error("constraint value {value:e} is outside the positive constraint cone")]
    OutsideConstraintCone { value: f64 },

    #[error("field minimum {min:e} is not strictly positive")]
    NonPositiveField { min: f64 },

    #[error("exponent q = {q} outside the open interval ({lo}, {hi})")]
    ExponentOutOfRange { q: f64, lo: f64, hi: f64 },

    #[error("no convergence at q = {q} after {iters} iterations (residual {residual:e})")]
    NonConvergence {
        q: f64,
        iters: usize,
        residual: f64,
        best: Box<SubcriticalSolution>,
    },

    #[error("continuation failed at q = {q}: {source}")]
    ContinuationFailed {
        q: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),

    #[error("concentration scale undefined: f(x_max) = {f_at_max:e} <= 0")]
    UndefinedScale { f_at_max: f64 },

    #[error("profile window radius {radius} exceeds the limit {limit}")]
    WindowTooLarge { radius: f64, limit: f64 },

    #[error("concentration scale under-resolved: mu * res = {mu_res}")]
    UnderResolved { mu_res: f64 },

    #[error("ball of radius {delta} covers the torus")]
    BallCoversTorus { delta: f64 },

    #[error("kernel is singular at coincident points")]
    SingularKernel,

    #[error("|mean f| = {mean:e} is below the threshold {threshold:e}")]
    MeanTooSmall { mean: f64, threshold: f64 },

    #[error("denominator underflow at s = {s}, x = {x:e}: reduce x is invalid, increase precision path")]
    JungUnderflow { s: f64, x: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
