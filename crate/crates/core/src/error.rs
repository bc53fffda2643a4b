//! Error type shared by state construction, propagation, and calibration.

use thiserror::Error;

/// Everything that can go wrong outside of plain I/O.
///
/// Numeric guards (`BoundaryLeak`, `StepSize`, `TailBound`) are hard errors
/// by design: a run that violates them would be silently wrong, not merely
/// imprecise.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A physical or numerical parameter is out of range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The initial state carries more weight outside the chain than allowed.
    #[error("initial-state tail mass bound {tail:.3e} exceeds {limit:.1e}; enlarge n_sites")]
    TailTruncation { tail: f64, limit: f64 },

    /// A propagation configuration is inconsistent with the model or state.
    #[error("invalid propagation config: {0}")]
    Config(String),

    /// Population reached the chain edge; the open boundary would reflect it.
    #[error("boundary population {mass:.3e} exceeds {tol:.1e} at t = {time}; the light cone reached the chain edge")]
    BoundaryLeak { time: f64, mass: f64, tol: f64 },

    /// The integrator lost the trace norm; the step size is too coarse.
    #[error("trace drift {drift:.3e} at t = {time}; reduce dt")]
    StepSize { time: f64, drift: f64 },

    /// A bracketing root search found no sign change.
    #[error("no sign change in [{lo}, {hi}] while solving for {what}")]
    NoRoot { what: String, lo: f64, hi: f64 },

    /// Adaptive quadrature stalled before the requested tolerance.
    #[error("quadrature error estimate {achieved:.3e} above requested {requested:.1e}")]
    Quadrature { achieved: f64, requested: f64 },

    /// A critical-parameter scan saw the same sign everywhere.
    #[error("no sign change across the scan grid for {0}")]
    NoSignChange(String),

    /// The truncated part of a lifetime average is too large to correct.
    #[error("lifetime-average tail estimate {tail:.3e} is {share:.2}% of the integral; extend the time window")]
    TailBound { tail: f64, share: f64 },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
