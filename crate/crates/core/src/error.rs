use thiserror::Error;

/// Error type shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed specification or parameters (wrong field kind, bad key, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Step refinement exhausted without reaching the requested tolerance.
    #[error("integration did not converge: achieved {achieved:e}, requested {requested:e}")]
    Accuracy { achieved: f64, requested: f64 },

    /// Least-squares fit attempted on data with no spread in q.
    #[error("degenerate fit: var(q) = {var_q:e} below the degeneracy floor")]
    DegenerateFit { var_q: f64 },

    /// Parameters fail the resonance condition.
    #[error("resonance condition violated: residual {residual:e}")]
    ResonanceViolation { residual: f64 },

    /// Root bracket does not straddle a sign change.
    #[error("no sign change in bracket [{lo}, {hi}]: r(lo) = {r_lo:e}, r(hi) = {r_hi:e}")]
    Bracketing { lo: f64, hi: f64, r_lo: f64, r_hi: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
