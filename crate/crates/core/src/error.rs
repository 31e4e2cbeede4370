use thiserror::Error;

/// Errors raised by the pricing, skew, density and estimation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid {field}: {value} ({reason})")]
    InvalidInput {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("skew volatility {vol} at moneyness {x} is not positive")]
    InvalidVol { x: f64, vol: f64 },

    #[error("design matrix is rank deficient: {distinct} distinct moneyness values, need at least 3")]
    RankDeficient { distinct: usize },

    #[error("need at least {needed} quotes, got {got}")]
    TooFewQuotes { needed: usize, got: usize },

    #[error("invalid range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },

    #[error("degenerate range: all sampled values equal {value}")]
    EmptyRange { value: f64 },

    #[error("exact fit: residual sum of squares is zero")]
    ExactFit,

    #[error("curve contains a non-finite density at x = {x}")]
    NonFiniteDensity { x: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, field: &'static str, value: f64, reason: &'static str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidInput { field, value, reason })
    }
}
