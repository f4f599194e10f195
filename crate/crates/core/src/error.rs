//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension must satisfy n >= 3, got {0}")]
    BadDimension(u32),
    #[error("radius must be positive, got {0}")]
    NonpositiveRadius(f64),
    #[error("direction vector ({0}, {1}) is not in the closed positive quadrant")]
    DirectionOutsideQuadrant(f64, f64),
    #[error("cannot normalize a zero direction vector")]
    ZeroDirection,
    #[error("invalid integrator config: {0}")]
    BadConfig(String),
    #[error("degenerate integration span [{0}, {1}]")]
    DegenerateSpan(f64, f64),
    #[error("step count exhausted after {max_steps} steps, reached t = {t}")]
    StepCountExhausted { max_steps: usize, t: f64 },
    #[error("step size underflow at t = {t} (likely blow-up)")]
    StepSizeUnderflow { t: f64 },
    #[error("evaluation at t = {t} outside trajectory span [{t0}, {t1}]")]
    OutOfSpan { t: f64, t0: f64, t1: f64 },
    #[error("necksize {eps} outside the open interval (0, {eps_cyl})")]
    NecksizeOutOfRange { eps: f64, eps_cyl: f64 },
    #[error("energy {h0} outside the open interval ({h_min}, 0)")]
    EnergyOutOfRange { h0: f64, h_min: f64 },
    #[error("period detection failed: {0}")]
    PeriodDetection(String),
    #[error("|V| vanished at t = {t}; no direction defined")]
    ZeroNorm { t: f64 },
    #[error("finite differencing did not converge under step halving (ratio {0})")]
    DifferencingDiverged(f64),
    #[error("Pohozaev tail too short: spread {spread} not settled within band {band}")]
    InsufficientTail { spread: f64, band: f64 },
    #[error("radial range [{s}, {r}] not covered by the run")]
    RangeViolation { s: f64, r: f64 },
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("window layout needs {needed} time units, run has {available}")]
    RunTooShort { needed: f64, available: f64 },
    #[error("no convergence detected: window errors do not decrease after burn-in")]
    NoConvergence,
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}
