//! Run configuration, read from TOML. Unknown keys are rejected.

use std::path::Path;

use serde::Deserialize;

use crate::bayes::{ParamBox, DEFAULT_RESOLUTION};
use crate::error::Result;
use crate::pricing::MarketEnv;
use crate::skew::SkewParams;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub market: MarketSection,
    pub grid: GridSection,
    pub posterior: PosteriorSection,
    pub fuzzy: FuzzySection,
    pub check: CheckSection,
    pub synth: SynthSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            market: MarketSection::default(),
            grid: GridSection::default(),
            posterior: PosteriorSection::default(),
            fuzzy: FuzzySection::default(),
            check: CheckSection::default(),
            synth: SynthSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarketSection {
    pub spot: f64,
    pub rate: f64,
    pub div_yield: f64,
    pub expiry: f64,
}

impl Default for MarketSection {
    fn default() -> Self {
        Self { spot: 1.0, rate: 0.10, div_yield: 0.02, expiry: 1.0 }
    }
}

/// Moneyness grid for exported curves and rasters.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { x_min: 0.05, x_max: 3.0, n: 591 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub c: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PosteriorSection {
    pub resolution: [usize; 3],
    pub bounds: Option<BoundsSection>,
}

impl Default for PosteriorSection {
    fn default() -> Self {
        Self { resolution: [DEFAULT_RESOLUTION; 3], bounds: None }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FuzzySection {
    pub vol_bins: usize,
    pub vol_range: Option<[f64; 2]>,
}

impl Default for FuzzySection {
    fn default() -> Self {
        Self { vol_bins: 60, vol_range: None }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckSection {
    pub x_min: f64,
    pub x_max: f64,
    pub samples: usize,
}

impl Default for CheckSection {
    fn default() -> Self {
        Self { x_min: 0.5, x_max: 1.5, samples: 101 }
    }
}

/// Synthetic quotes: the true skew plus Gaussian noise on a uniform grid.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSection {
    pub skew: [f64; 3],
    pub n_quotes: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub noise_sd: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self { skew: [0.3, -0.2, 0.5], n_quotes: 15, x_min: 0.8, x_max: 1.2, noise_sd: 0.005 }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> std::result::Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn market_env(&self) -> Result<MarketEnv> {
        let m = &self.market;
        MarketEnv::new(m.spot, m.rate, m.div_yield, m.expiry)
    }

    pub fn bounds(&self) -> Option<ParamBox> {
        self.posterior.bounds.as_ref().map(|b| ParamBox {
            a: (b.a[0], b.a[1]),
            b: (b.b[0], b.b[1]),
            c: (b.c[0], b.c[1]),
        })
    }

    pub fn synth_skew(&self) -> Result<SkewParams> {
        let [a, b, c] = self.synth.skew;
        SkewParams::new(a, b, c)
    }

    /// Flat `key=value` lines describing the effective configuration.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("config.seed".to_string(), self.seed.to_string()),
            ("config.market.spot".into(), self.market.spot.to_string()),
            ("config.market.rate".into(), self.market.rate.to_string()),
            ("config.market.div_yield".into(), self.market.div_yield.to_string()),
            ("config.market.expiry".into(), self.market.expiry.to_string()),
            ("config.grid.x_min".into(), self.grid.x_min.to_string()),
            ("config.grid.x_max".into(), self.grid.x_max.to_string()),
            ("config.grid.n".into(), self.grid.n.to_string()),
            ("config.posterior.resolution".into(), join(&self.posterior.resolution)),
            ("config.fuzzy.vol_bins".into(), self.fuzzy.vol_bins.to_string()),
            ("config.check.x_min".into(), self.check.x_min.to_string()),
            ("config.check.x_max".into(), self.check.x_max.to_string()),
            ("config.check.samples".into(), self.check.samples.to_string()),
            ("config.synth.skew".into(), join(&self.synth.skew)),
            ("config.synth.n_quotes".into(), self.synth.n_quotes.to_string()),
            ("config.synth.x_min".into(), self.synth.x_min.to_string()),
            ("config.synth.x_max".into(), self.synth.x_max.to_string()),
            ("config.synth.noise_sd".into(), self.synth.noise_sd.to_string()),
        ];
        if let Some(b) = &self.posterior.bounds {
            out.push(("config.posterior.bounds.a".into(), join(&b.a)));
            out.push(("config.posterior.bounds.b".into(), join(&b.b)));
            out.push(("config.posterior.bounds.c".into(), join(&b.c)));
        }
        if let Some(r) = &self.fuzzy.vol_range {
            out.push(("config.fuzzy.vol_range".into(), join(r)));
        }
        out
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}
