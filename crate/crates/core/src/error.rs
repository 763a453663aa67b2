//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Exponential overflow or a non-finite value while evaluating the symbol.
    #[error("symbol evaluation produced a non-finite value in jump atom {atom} at (p,nu)={p_dot_nu}")]
    JumpOverflow { atom: usize, p_dot_nu: f64 },

    #[error("non-finite value in {what}")]
    NonFinite { what: String },

    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),

    #[error("invalid initial data: {0}")]
    InvalidInitialData(String),

    /// A characteristic left the declared spatial window.
    #[error("trajectory from alpha={alpha} left the spatial window at t={t}")]
    WindowExit { alpha: f64, t: f64 },

    /// The guarded RK4 step could not meet the local error target.
    #[error("integration step rejected at t={t} after {halvings} halvings (local error {err:.3e})")]
    StepRejected { t: f64, halvings: u32, err: f64 },

    #[error("degenerate shock: |p_left - p_right| = {gap:.3e} < 1e-12")]
    DegenerateShock { gap: f64 },

    #[error("no three-valued region on the curve at t={t}")]
    NoThreeValuedRegion { t: f64 },

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),

    /// Grid point inside the projection hull got no branch.
    #[error("no branch covers x={x} inside the projection hull")]
    EmptyBranchInHull { x: f64 },

    #[error("fill strategy {strategy} would create an interior minimum ({min:.6e} below endpoint minimum {endpoint_min:.6e}); no-interior-minimum constraint violated")]
    FillInteriorMinimum {
        strategy: String,
        min: f64,
        endpoint_min: f64,
    },

    #[error("lemma hypotheses not met: {0}")]
    LemmaHypotheses(String),

    #[error("quadrature failed to converge: {trace}")]
    Quadrature { trace: String },

    #[error("direct solver stability bound violated: {why}; suggested dt <= {suggested_dt:.3e}")]
    Stability { why: String, suggested_dt: f64 },

    #[error("negative regular density {rho:.3e} at x={x}")]
    NegativeDensity { rho: f64, x: f64 },

    /// Trajectories leave the shock instead of entering it; the delta mass
    /// balance is only defined for attracting (incoming) shocks.
    #[error("non-attracting shock: delta mass reached {mass:.3e} < -1e-8")]
    NonAttractingShock { mass: f64 },

    #[error("backward saddle evaluation failed at x={x}: {why}")]
    NoSaddle { x: f64, why: String },

    #[error("overlapping terra-incognita fans are unsupported (intervals [{a_lo},{a_hi}] and [{b_lo},{b_hi}])")]
    TerraOverlap {
        a_lo: f64,
        a_hi: f64,
        b_lo: f64,
        b_hi: f64,
    },

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
