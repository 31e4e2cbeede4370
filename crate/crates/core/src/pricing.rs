//! Black-Scholes European option pricing with a continuous dividend yield,
//! plus the strike and volatility sensitivities used for density extraction.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{ensure, Result};

/// Black-Scholes context shared by every pricing call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketEnv {
    spot: f64,
    rate: f64,
    div_yield: f64,
    expiry: f64,
}

impl MarketEnv {
    pub fn new(spot: f64, rate: f64, div_yield: f64, expiry: f64) -> Result<Self> {
        ensure(spot.is_finite() && spot > 0.0, "spot", spot, "must be positive and finite")?;
        ensure(rate.is_finite(), "rate", rate, "must be finite")?;
        ensure(div_yield.is_finite(), "div_yield", div_yield, "must be finite")?;
        ensure(expiry.is_finite() && expiry > 0.0, "expiry", expiry, "must be positive and finite")?;
        Ok(Self { spot, rate, div_yield, expiry })
    }

    /// Unit spot, one year, 10% rate and 2% dividend yield.
    pub fn example() -> Self {
        Self { spot: 1.0, rate: 0.10, div_yield: 0.02, expiry: 1.0 }
    }

    pub fn spot(&self) -> f64 {
        self.spot
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn div_yield(&self) -> f64 {
        self.div_yield
    }

    pub fn expiry(&self) -> f64 {
        self.expiry
    }

    /// e^{-rt}
    pub fn discount(&self) -> f64 {
        (-self.rate * self.expiry).exp()
    }

    /// e^{-qt}
    pub fn dividend_discount(&self) -> f64 {
        (-self.div_yield * self.expiry).exp()
    }

    /// Forward price of the underlying, S e^{(r-q)t}.
    pub fn forward(&self) -> f64 {
        self.spot * ((self.rate - self.div_yield) * self.expiry).exp()
    }
}

impl Default for MarketEnv {
    fn default() -> Self {
        Self::example()
    }
}

/// An observed implied volatility at a strike expressed as moneyness E/S.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionQuote {
    pub moneyness: f64,
    pub vol: f64,
}

impl OptionQuote {
    pub fn new(moneyness: f64, vol: f64) -> Result<Self> {
        ensure(
            moneyness.is_finite() && moneyness > 0.0,
            "moneyness",
            moneyness,
            "must be positive and finite",
        )?;
        ensure(vol.is_finite() && vol > 0.0, "vol", vol, "must be positive and finite")?;
        Ok(Self { moneyness, vol })
    }
}

/// Standard normal density.
pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF, via the complementary error function so both tails
/// keep full relative precision.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

fn check_inputs(strike: f64, vol: f64) -> Result<()> {
    ensure(strike.is_finite() && strike >= 0.0, "strike", strike, "must be non-negative and finite")?;
    ensure(vol.is_finite() && vol >= 0.0, "vol", vol, "must be non-negative and finite")
}

fn check_strict(strike: f64, vol: f64) -> Result<()> {
    ensure(strike.is_finite() && strike > 0.0, "strike", strike, "must be positive and finite")?;
    ensure(vol.is_finite() && vol > 0.0, "vol", vol, "must be positive and finite")
}

// Requires strike > 0 and vol > 0.
fn d1_d2(env: &MarketEnv, strike: f64, vol: f64) -> (f64, f64) {
    let sd = vol * env.expiry.sqrt();
    let d1 = ((env.spot / strike).ln() + (env.rate - env.div_yield + 0.5 * vol * vol) * env.expiry) / sd;
    (d1, d1 - sd)
}

/// European put price. A zero volatility gives the deterministic forward
/// payoff, a zero strike gives zero.
pub fn put_price(env: &MarketEnv, strike: f64, vol: f64) -> Result<f64> {
    check_inputs(strike, vol)?;
    if strike == 0.0 {
        return Ok(0.0);
    }
    let df = env.discount();
    let dq = env.dividend_discount();
    if vol == 0.0 {
        return Ok((strike * df - env.spot * dq).max(0.0));
    }
    let (d1, d2) = d1_d2(env, strike, vol);
    Ok(strike * df * norm_cdf(-d2) - env.spot * dq * norm_cdf(-d1))
}

/// European call price, same conventions as [`put_price`].
pub fn call_price(env: &MarketEnv, strike: f64, vol: f64) -> Result<f64> {
    check_inputs(strike, vol)?;
    let df = env.discount();
    let dq = env.dividend_discount();
    if strike == 0.0 {
        return Ok(env.spot * dq);
    }
    if vol == 0.0 {
        return Ok((env.spot * dq - strike * df).max(0.0));
    }
    let (d1, d2) = d1_d2(env, strike, vol);
    Ok(env.spot * dq * norm_cdf(d1) - strike * df * norm_cdf(d2))
}

/// Partial derivative of the put price in strike at fixed volatility,
/// e^{-rt} N(-d2).
pub fn put_strike_delta(env: &MarketEnv, strike: f64, vol: f64) -> Result<f64> {
    check_strict(strike, vol)?;
    let (_, d2) = d1_d2(env, strike, vol);
    Ok(env.discount() * norm_cdf(-d2))
}

/// `put_strike_delta` and `vega` together, sharing one d1 evaluation.
pub(crate) fn strike_delta_and_vega(env: &MarketEnv, strike: f64, vol: f64) -> Result<(f64, f64)> {
    check_strict(strike, vol)?;
    let (d1, d2) = d1_d2(env, strike, vol);
    let delta = env.discount() * norm_cdf(-d2);
    let vega = env.spot * env.dividend_discount() * env.expiry.sqrt() * norm_pdf(d1);
    Ok((delta, vega))
}

/// Sensitivity of the (put or call) price to volatility.
pub fn vega(env: &MarketEnv, strike: f64, vol: f64) -> Result<f64> {
    check_strict(strike, vol)?;
    let (d1, _) = d1_d2(env, strike, vol);
    Ok(env.spot * env.dividend_discount() * env.expiry.sqrt() * norm_pdf(d1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env() -> MarketEnv {
        MarketEnv::example()
    }

    #[test]
    fn norm_cdf_symmetry() {
        assert_eq!(norm_cdf(0.0), 0.5);
        assert!((norm_cdf(1.3) - (1.0 - norm_cdf(-1.3))).abs() < 1e-15);
    }

    #[test]
    fn env_rejects_bad_fields() {
        assert!(MarketEnv::new(0.0, 0.1, 0.0, 1.0).is_err());
        assert!(MarketEnv::new(1.0, 0.1, 0.0, 0.0).is_err());
        assert!(MarketEnv::new(1.0, f64::NAN, 0.0, 1.0).is_err());
        assert!(MarketEnv::new(1.0, -0.01, -0.02, 1.0).is_ok());
    }

    #[test]
    fn quote_validation() {
        assert!(OptionQuote::new(1.0, 0.2).is_ok());
        assert!(OptionQuote::new(0.0, 0.2).is_err());
        assert!(OptionQuote::new(1.0, -0.1).is_err());
    }

    #[test]
    fn zero_strike_and_zero_vol_limits() {
        let e = env();
        assert_eq!(put_price(&e, 0.0, 0.3).unwrap(), 0.0);
        assert_eq!(call_price(&e, 0.0, 0.3).unwrap(), e.dividend_discount());
        let expect = (1.2 * (-0.10f64).exp() - (-0.02f64).exp()).max(0.0);
        assert_eq!(put_price(&e, 1.2, 0.0).unwrap(), expect);
        // tiny vol converges to the deterministic limit
        assert!((put_price(&e, 1.2, 1e-6).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn rejects_negative_inputs() {
        let e = env();
        assert!(put_price(&e, -1.0, 0.2).is_err());
        assert!(put_price(&e, 1.0, -0.2).is_err());
        assert!(call_price(&e, 1.0, f64::NAN).is_err());
        assert!(put_strike_delta(&e, 0.0, 0.2).is_err());
        assert!(vega(&e, 1.0, 0.0).is_err());
    }

    #[test]
    fn parity_at_reference_point() {
        let e = env();
        let c = call_price(&e, 1.0, 0.2).unwrap();
        let p = put_price(&e, 1.0, 0.2).unwrap();
        assert!((c - p - (e.dividend_discount() - e.discount())).abs() < 1e-14);
    }

    #[test]
    fn strike_delta_limits() {
        let e = env();
        assert!(put_strike_delta(&e, 1e-6, 0.2).unwrap() < 1e-12);
        assert!((put_strike_delta(&e, 1e3, 0.2).unwrap() - e.discount()).abs() < 1e-12);
    }

    #[test]
    fn vega_same_for_put_and_call() {
        let e = env();
        let h = 1e-6;
        let v = vega(&e, 1.1, 0.25).unwrap();
        let put_fd = (put_price(&e, 1.1, 0.25 + h).unwrap() - put_price(&e, 1.1, 0.25 - h).unwrap()) / (2.0 * h);
        let call_fd = (call_price(&e, 1.1, 0.25 + h).unwrap() - call_price(&e, 1.1, 0.25 - h).unwrap()) / (2.0 * h);
        assert!((put_fd - v).abs() < 1e-7);
        assert!((call_fd - v).abs() < 1e-7);
    }
}
