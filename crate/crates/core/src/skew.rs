//! Quadratic volatility skew in moneyness, σ(x) = a + b(x-1) + c(x-1)².

use crate::error::{ensure, Error, Result};
use crate::implied::smile_put_slope;
use crate::pricing::MarketEnv;

/// Coefficients of the quadratic skew.
///
/// `a` is the at-the-money volatility, `b` the at-the-money slope and `c`
/// half the (constant) second derivative in moneyness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl SkewParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        ensure(a.is_finite() && a > 0.0, "a", a, "at-the-money vol must be positive and finite")?;
        ensure(b.is_finite(), "b", b, "must be finite")?;
        ensure(c.is_finite(), "c", c, "must be finite")?;
        Ok(Self { a, b, c })
    }

    pub fn flat(a: f64) -> Result<Self> {
        Self::new(a, 0.0, 0.0)
    }

    /// Volatility at moneyness `x`. Not clamped: may be zero or negative for
    /// extreme parameters.
    pub fn vol_at(&self, x: f64) -> f64 {
        let u = x - 1.0;
        self.a + u * (self.b + u * self.c)
    }

    /// dσ/dx
    pub fn vol_slope(&self, x: f64) -> f64 {
        self.b + 2.0 * self.c * (x - 1.0)
    }

    /// d²σ/dx², constant for a quadratic.
    pub fn vol_curvature(&self) -> f64 {
        2.0 * self.c
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// Smile-consistent put price falls as strike rises (implied CDF < 0).
    DecreasingPut,
    /// Skew volatility is zero or negative.
    NonPositiveVol,
}

impl ViolationKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ViolationKind::DecreasingPut => "decreasing_put",
            ViolationKind::NonPositiveVol => "non_positive_vol",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub x: f64,
    pub kind: ViolationKind,
    /// The offending quantity: total dP/dE for `DecreasingPut`, σ(x) otherwise.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlausibilityReport {
    pub samples: Vec<f64>,
    pub violations: Vec<Violation>,
}

impl PlausibilityReport {
    pub fn is_plausible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

/// Uniform grid of `n` points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

/// Sample the skew on a uniform moneyness grid and report every point where
/// the volatility is non-positive or the smile-consistent put price would
/// decrease with strike.
pub fn plausibility_check(
    env: &MarketEnv,
    skew: &SkewParams,
    x_range: (f64, f64),
    n_samples: usize,
) -> Result<PlausibilityReport> {
    let (lo, hi) = x_range;
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
        return Err(Error::InvalidRange { lo, hi });
    }
    if n_samples < 2 {
        return Err(Error::InvalidInput {
            field: "n_samples",
            value: n_samples as f64,
            reason: "need at least 2 samples",
        });
    }
    let samples = linspace(lo, hi, n_samples);
    let mut violations = Vec::new();
    for &x in &samples {
        let vol = skew.vol_at(x);
        if vol <= 0.0 {
            violations.push(Violation { x, kind: ViolationKind::NonPositiveVol, value: vol });
            continue;
        }
        let slope = smile_put_slope(env, skew, x)?;
        if slope < 0.0 {
            violations.push(Violation { x, kind: ViolationKind::DecreasingPut, value: slope });
        }
    }
    Ok(PlausibilityReport { samples, violations })
}
