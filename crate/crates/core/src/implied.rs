//! Market-implied distributions from a volatility skew.
//!
//! The put price consistent with the skew is P(x) = BS_put(x·S, σ(x)). Its
//! first strike derivative, scaled by e^{rt}, is the implied CDF and its
//! second derivative the implied density. Everything is expressed per unit
//! moneyness.

use crate::error::{ensure, Error, Result};
use crate::par;
use crate::pricing::{self, MarketEnv};
use crate::skew::{linspace, SkewParams};

/// Step, in moneyness, for every finite difference taken here.
pub const DIFF_STEP: f64 = 1e-4;

/// Densities below `-DENSITY_TOLERANCE` are flagged as implausible.
pub const DENSITY_TOLERANCE: f64 = 1e-9;

/// Boundary density above which an integral over the curve is considered
/// truncated.
pub const BOUNDARY_DENSITY_THRESHOLD: f64 = 1e-8;

/// Default number of points for curves used in moment computations.
pub const DEFAULT_CURVE_POINTS: usize = 4001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Closed-form first derivative; density from a central difference of it.
    #[default]
    Analytic,
    /// Central differences of the smile-consistent put price.
    FiniteDifference,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "analytic" => Ok(Method::Analytic),
            "fd" | "finite_difference" => Ok(Method::FiniteDifference),
            other => Err(format!("unknown method '{other}', expected analytic or fd")),
        }
    }
}

fn checked_vol(skew: &SkewParams, x: f64) -> Result<f64> {
    ensure(x.is_finite() && x > 0.0, "moneyness", x, "must be positive and finite")?;
    let vol = skew.vol_at(x);
    if vol > 0.0 && vol.is_finite() {
        Ok(vol)
    } else {
        Err(Error::InvalidVol { x, vol })
    }
}

fn check_stencil(x: f64) -> Result<()> {
    ensure(x.is_finite() && x > DIFF_STEP, "moneyness", x, "must exceed the difference step")
}

/// Put price at strike `x·spot` using the skew's volatility there.
pub fn smile_put_price(env: &MarketEnv, skew: &SkewParams, x: f64) -> Result<f64> {
    let vol = checked_vol(skew, x)?;
    pricing::put_price(env, x * env.spot(), vol)
}

/// Total derivative dP/dE of the smile-consistent put price,
/// e^{-rt} N(-d2) + vega · σ'(x) / S.
pub fn smile_put_slope(env: &MarketEnv, skew: &SkewParams, x: f64) -> Result<f64> {
    let vol = checked_vol(skew, x)?;
    let strike = x * env.spot();
    let (partial, vega) = pricing::strike_delta_and_vega(env, strike, vol)?;
    Ok(partial + vega * skew.vol_slope(x) / env.spot())
}

/// Implied cumulative probability of finishing below moneyness `x`.
///
/// The value is not clamped to [0, 1]; implausible skews can push it out.
pub fn implied_cdf(env: &MarketEnv, skew: &SkewParams, x: f64, method: Method) -> Result<f64> {
    let growth = (env.rate() * env.expiry()).exp();
    match method {
        Method::Analytic => Ok(growth * smile_put_slope(env, skew, x)?),
        Method::FiniteDifference => {
            check_stencil(x)?;
            let h = DIFF_STEP;
            let up = smile_put_price(env, skew, x + h)?;
            let down = smile_put_price(env, skew, x - h)?;
            Ok(growth * (up - down) / (2.0 * h * env.spot()))
        }
    }
}

/// Implied probability density per unit moneyness at `x`.
pub fn implied_pdf(env: &MarketEnv, skew: &SkewParams, x: f64, method: Method) -> Result<f64> {
    check_stencil(x)?;
    let h = DIFF_STEP;
    match method {
        Method::Analytic => {
            let up = implied_cdf(env, skew, x + h, Method::Analytic)?;
            let down = implied_cdf(env, skew, x - h, Method::Analytic)?;
            Ok((up - down) / (2.0 * h))
        }
        Method::FiniteDifference => {
            let growth = (env.rate() * env.expiry()).exp();
            let up = smile_put_price(env, skew, x + h)?;
            let mid = smile_put_price(env, skew, x)?;
            let down = smile_put_price(env, skew, x - h)?;
            Ok(growth * (up - 2.0 * mid + down) / (h * h * env.spot()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointFlag {
    Ok,
    /// Evaluated, but the CDF left [0, 1] or the density went negative.
    Implausible,
    /// The skew volatility was non-positive somewhere on the stencil.
    InvalidVol,
    /// Part of an ensemble was left out at this point (see the skipped mass).
    Skipped,
}

impl PointFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointFlag::Ok => "ok",
            PointFlag::Implausible => "implausible",
            PointFlag::InvalidVol => "invalid_vol",
            PointFlag::Skipped => "skipped",
        }
    }
}

/// Implied density and CDF sampled on a moneyness grid. Points flagged
/// `InvalidVol` carry NaN in both columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve {
    pub xs: Vec<f64>,
    pub pdf: Vec<f64>,
    pub cdf: Vec<f64>,
    pub flags: Vec<PointFlag>,
}

impl DensityCurve {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn all_ok(&self) -> bool {
        self.flags.iter().all(|f| *f == PointFlag::Ok)
    }
}

pub(crate) fn classify(pdf: f64, cdf: f64) -> PointFlag {
    let tol = DENSITY_TOLERANCE;
    if pdf < -tol || cdf < -tol || cdf > 1.0 + tol {
        PointFlag::Implausible
    } else {
        PointFlag::Ok
    }
}

pub(crate) fn validate_axis(xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::InvalidInput { field: "x_axis", value: 0.0, reason: "must not be empty" });
    }
    for (i, &x) in xs.iter().enumerate() {
        ensure(x.is_finite() && x > DIFF_STEP, "x_axis", x, "points must be positive and exceed the difference step")?;
        if i > 0 && x <= xs[i - 1] {
            return Err(Error::InvalidInput { field: "x_axis", value: x, reason: "must be strictly increasing" });
        }
    }
    Ok(())
}

/// Evaluate CDF and density of one skew at each point of `xs`.
pub fn density_on_axis(env: &MarketEnv, skew: &SkewParams, xs: &[f64], method: Method) -> Result<DensityCurve> {
    validate_axis(xs)?;
    let points = par::map_slice(xs, |&x| {
        match (implied_pdf(env, skew, x, method), implied_cdf(env, skew, x, method)) {
            (Ok(p), Ok(c)) => Ok((p, c, classify(p, c))),
            (Err(Error::InvalidVol { .. }), _) | (_, Err(Error::InvalidVol { .. })) => {
                Ok((f64::NAN, f64::NAN, PointFlag::InvalidVol))
            }
            (Err(e), _) | (_, Err(e)) => Err(e),
        }
    });
    let mut curve = DensityCurve {
        xs: xs.to_vec(),
        pdf: Vec::with_capacity(xs.len()),
        cdf: Vec::with_capacity(xs.len()),
        flags: Vec::with_capacity(xs.len()),
    };
    for point in points {
        let (p, c, f) = point?;
        curve.pdf.push(p);
        curve.cdf.push(c);
        curve.flags.push(f);
    }
    Ok(curve)
}

/// Sample the implied distribution on `n` uniform points in `[x_min, x_max]`.
pub fn density_curve(
    env: &MarketEnv,
    skew: &SkewParams,
    x_min: f64,
    x_max: f64,
    n: usize,
    method: Method,
) -> Result<DensityCurve> {
    if !(x_min.is_finite() && x_max.is_finite() && x_min > 0.0 && x_max > x_min) {
        return Err(Error::InvalidRange { lo: x_min, hi: x_max });
    }
    ensure(n >= 3, "n", n as f64, "need at least 3 grid points")?;
    density_on_axis(env, skew, &linspace(x_min, x_max, n), method)
}

/// Default moneyness domain for moment computations,
/// `[0.05, 10·e^{(r-q)t}]`.
pub fn default_domain(env: &MarketEnv) -> (f64, f64) {
    (0.05, 10.0 * ((env.rate() - env.div_yield()) * env.expiry()).exp())
}

/// Trapezoid rule on an arbitrary increasing grid.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mass: f64,
    pub mean: f64,
    pub variance: f64,
    /// Largest absolute density at either end of the grid.
    pub boundary_density: f64,
}

impl Moments {
    /// True when the curve's ends carry enough density that mass is likely
    /// missing outside the grid.
    pub fn truncated(&self) -> bool {
        self.boundary_density > BOUNDARY_DENSITY_THRESHOLD
    }
}

fn finite_pdf(curve: &DensityCurve) -> Result<()> {
    ensure(curve.len() >= 2, "curve", curve.len() as f64, "need at least 2 points")?;
    match curve.xs.iter().zip(&curve.pdf).find(|(_, p)| !p.is_finite()) {
        Some((&x, _)) => Err(Error::NonFiniteDensity { x }),
        None => Ok(()),
    }
}

fn boundary_density(curve: &DensityCurve) -> f64 {
    curve.pdf[0].abs().max(curve.pdf[curve.len() - 1].abs())
}

/// Mass, mean and central variance of the density by the trapezoid rule.
/// Mean and variance are normalized by the mass.
pub fn distribution_moments(curve: &DensityCurve) -> Result<Moments> {
    finite_pdf(curve)?;
    let xs = &curve.xs;
    let mass = trapezoid(xs, &curve.pdf);
    let first: Vec<f64> = xs.iter().zip(&curve.pdf).map(|(x, p)| x * p).collect();
    let mean = trapezoid(xs, &first) / mass;
    let second: Vec<f64> = xs.iter().zip(&curve.pdf).map(|(x, p)| (x - mean) * (x - mean) * p).collect();
    let variance = trapezoid(xs, &second) / mass;
    Ok(Moments { mass, mean, variance, boundary_density: boundary_density(curve) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Valuation {
    pub price: f64,
    pub truncated: bool,
}

/// Discounted expected payoff under the curve's density.
pub fn expected_payoff<F>(env: &MarketEnv, curve: &DensityCurve, payoff: F) -> Result<Valuation>
where
    F: Fn(f64) -> f64,
{
    finite_pdf(curve)?;
    let values: Vec<f64> = curve.xs.iter().zip(&curve.pdf).map(|(&x, p)| payoff(x) * p).collect();
    if let Some((&x, _)) = curve.xs.iter().zip(&values).find(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidInput { field: "payoff", value: x, reason: "payoff not finite on the grid" });
    }
    Ok(Valuation {
        price: env.discount() * trapezoid(&curve.xs, &values),
        truncated: boundary_density(curve) > BOUNDARY_DENSITY_THRESHOLD,
    })
}
