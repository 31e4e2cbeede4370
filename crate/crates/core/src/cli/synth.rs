use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::bayes::QuoteSet;
use crate::error::{ensure, Error, Result};
use crate::pricing::OptionQuote;
use crate::skew::{linspace, SkewParams};

/// Quotes at `n` uniform moneyness points in `x_range`, with vols drawn as
/// the true skew plus N(0, noise_sd²) noise from a ChaCha8 stream seeded by
/// `seed`. The stream is stable across platforms and crate versions.
pub fn synthetic_quotes(
    truth: &SkewParams,
    n: usize,
    x_range: (f64, f64),
    noise_sd: f64,
    seed: u64,
) -> Result<QuoteSet> {
    ensure(n >= 1, "n_quotes", n as f64, "must be positive")?;
    let (lo, hi) = x_range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidRange { lo, hi });
    }
    ensure(noise_sd.is_finite() && noise_sd >= 0.0, "noise_sd", noise_sd, "must be non-negative")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sd).map_err(|_| Error::InvalidInput {
        field: "noise_sd",
        value: noise_sd,
        reason: "not a valid standard deviation",
    })?;
    linspace(lo, hi, n)
        .into_iter()
        .map(|x| OptionQuote::new(x, truth.vol_at(x) + noise.sample(&mut rng)))
        .collect::<Result<Vec<_>>>()
        .map(QuoteSet::new)
}
