//! Market-implied probability distributions from volatility skews, and
//! Bayesian estimation of a quadratic skew from sparse quotes.
//!
//! * [`pricing`]: Black-Scholes puts, calls and sensitivities.
//! * [`skew`]: the quadratic skew and its plausibility check.
//! * [`implied`]: implied CDF and density from the skew-consistent put prices.
//! * [`bayes`]: least-squares fit and grid posterior over the skew coefficients.
//! * [`ensemble`]: fuzzy smile raster and posterior-averaged density.
//! * [`cli`]: file formats, configuration and the command-line driver.
//!
//! With the default `parallel` feature, grid evaluations run on rayon.
//! Outputs are identical with or without it.

pub mod bayes;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod implied;
mod par;
pub mod pricing;
pub mod skew;

pub use bayes::{
    build_default_posterior, build_posterior, least_squares_fit, log_marginal_likelihood, marginal_1d, marginal_2d,
    Marginal1d, Marginal2d, Param, ParamBox, PosteriorGrid, QuoteSet, Regression,
};
pub use ensemble::{averaged_pdf, fuzzy_smile, AveragedDensity, FuzzyGrid};
pub use error::{Error, Result};
pub use implied::{
    density_curve, distribution_moments, expected_payoff, implied_cdf, implied_pdf, smile_put_price, DensityCurve,
    Method, Moments, PointFlag,
};
pub use pricing::{call_price, norm_cdf, put_price, put_strike_delta, vega, MarketEnv, OptionQuote};
pub use skew::{plausibility_check, PlausibilityReport, SkewParams, Violation, ViolationKind};
