//! Independent oracles shared by the integration tests. Nothing here calls
//! into the code paths it is used to check.

#![allow(dead_code)]

use std::f64::consts::PI;

use skewdist::cli::synth::synthetic_quotes;
use skewdist::{MarketEnv, QuoteSet, SkewParams};

/// Seed of the noisy fixture quote set.
pub const FIXTURE_SEED: u64 = 20_240_517;

/// Fifteen quotes on [0.8, 1.2] from (0.3, -0.2, 0.5) with N(0, 0.005²) noise.
pub fn fixture_quotes() -> QuoteSet {
    let truth = SkewParams::new(0.3, -0.2, 0.5).unwrap();
    synthetic_quotes(&truth, 15, (0.8, 1.2), 0.005, FIXTURE_SEED).unwrap()
}

pub fn example_env() -> MarketEnv {
    MarketEnv::new(1.0, 0.10, 0.02, 1.0).unwrap()
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
    assert!(n.is_multiple_of(2));
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + h * i as f64);
    }
    s * h / 3.0
}

pub fn gaussian(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Φ(z) by integrating the Gaussian density from -12 (tail below ~1e-33).
pub fn norm_cdf_quadrature(z: f64) -> f64 {
    simpson(gaussian, -12.0, z, 20_000)
}

/// Risk-neutral log-normal density of S_T / S_0 with constant vol.
pub fn lognormal_pdf(env: &MarketEnv, vol: f64, x: f64) -> f64 {
    let t = env.expiry();
    let mu = (env.rate() - env.div_yield() - 0.5 * vol * vol) * t;
    let sd = vol * t.sqrt();
    let z = (x.ln() - mu) / sd;
    gaussian(z) / (x * sd)
}

/// Put price as the discounted integral of (K - S)⁺ against the log-normal
/// density, with the integral taken in log-space.
pub fn put_by_quadrature(env: &MarketEnv, strike: f64, vol: f64) -> f64 {
    let t = env.expiry();
    let mu = env.spot().ln() + (env.rate() - env.div_yield() - 0.5 * vol * vol) * t;
    let sd = vol * t.sqrt();
    let upper = strike.ln();
    let lower = mu - 40.0 * sd;
    let integrand = |y: f64| (strike - y.exp()) * gaussian((y - mu) / sd) / sd;
    env.discount() * simpson(integrand, lower, upper, 200_000)
}

/// log ∫₀^∞ ∏ N(rᵢ; 0, s²) · (1/s) ds for the given SSR and count, by the
/// trapezoid rule in u = ln s with log-sum-exp.
pub fn log_scale_integral(ssr: f64, n: usize) -> f64 {
    let nf = n as f64;
    let log_f = |u: f64| -nf * u - 0.5 * nf * (2.0 * PI).ln() - ssr / (2.0 * (2.0 * u).exp());
    let (lo, hi, m) = (-40.0, 20.0, 600_000);
    let h = (hi - lo) / m as f64;
    let vals: Vec<f64> = (0..=m).map(|i| log_f(lo + h * i as f64)).collect();
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for (i, v) in vals.iter().enumerate() {
        let w = if i == 0 || i == m { 0.5 } else { 1.0 };
        s += w * (v - max).exp();
    }
    max + (s * h).ln()
}

/// Least squares through the SVD pseudoinverse of the design matrix.
pub fn pinv_fit(quotes: &QuoteSet) -> [f64; 3] {
    let n = quotes.len();
    let x = nalgebra::DMatrix::from_fn(n, 3, |i, j| (quotes.quotes[i].moneyness - 1.0).powi(j as i32));
    let y = nalgebra::DVector::from_iterator(n, quotes.quotes.iter().map(|q| q.vol));
    let pinv = x.pseudo_inverse(1e-14).unwrap();
    let theta = pinv * y;
    [theta[0], theta[1], theta[2]]
}

/// Black-Scholes put built on the quadrature normal CDF.
pub fn bs_put(env: &MarketEnv, strike: f64, vol: f64) -> f64 {
    let t = env.expiry();
    let sd = vol * t.sqrt();
    let d1 = ((env.spot() / strike).ln() + (env.rate() - env.div_yield() + 0.5 * vol * vol) * t) / sd;
    let d2 = d1 - sd;
    let n = |z: f64| if z < -12.0 { 0.0 } else { simpson(gaussian, -12.0, z, 4_000) };
    strike * (-env.rate() * t).exp() * n(-d2) - env.spot() * (-env.div_yield() * t).exp() * n(-d1)
}

/// Put prices consistent with the skew on a grid, from the independent
/// Black-Scholes above; `None` where the skew vol is non-positive.
pub fn brute_force_puts(env: &MarketEnv, skew: &SkewParams, xs: &[f64]) -> Vec<Option<f64>> {
    xs.iter()
        .map(|&x| {
            let v = skew.a + skew.b * (x - 1.0) + skew.c * (x - 1.0) * (x - 1.0);
            (v > 0.0).then(|| bs_put(env, x * env.spot(), v))
        })
        .collect()
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Invoke the `skewdist` binary with `RAYON_NUM_THREADS` pinned.
pub fn run_cli(args: &[&str], threads: usize) -> std::process::Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_skewdist"))
        .args(args)
        .env("RAYON_NUM_THREADS", threads.to_string())
        .output()
        .expect("failed to launch skewdist")
}

pub const PIPELINE_CONFIG: &str = "\
seed = 11

[market]
expiry = 0.1

[grid]
x_min = 0.6
x_max = 1.6
n = 101

[posterior]
resolution = [21, 21, 21]

[fuzzy]
vol_bins = 30
";

/// synth → fit → pdf → posterior → fuzzy → avg-pdf into `dir`; returns every
/// CSV artifact as (name, bytes), sorted by name.
pub fn full_pipeline(dir: &std::path::Path, threads: usize) -> Vec<(String, Vec<u8>)> {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, PIPELINE_CONFIG).unwrap();
    let cfg = cfg.to_str().unwrap().to_owned();
    let quotes = dir.join("quotes.csv").to_str().unwrap().to_owned();
    let mut artifacts = Vec::new();
    for cmd in ["synth", "fit", "pdf", "posterior", "fuzzy", "avg-pdf"] {
        let out = dir.join(cmd);
        let out = out.to_str().unwrap();
        let mut args = vec![cmd, "--config", &cfg, "--out", out];
        if cmd != "synth" {
            args.extend(["--quotes", &quotes]);
        }
        let res = run_cli(&args, threads);
        assert!(res.status.success(), "{cmd}: {}", String::from_utf8_lossy(&res.stderr));
        if cmd == "synth" {
            std::fs::copy(dir.join("synth/quotes.csv"), &quotes).unwrap();
        }
        let mut names: Vec<_> = std::fs::read_dir(dir.join(cmd))
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .filter(|n| n.ends_with(".csv"))
            .collect();
        names.sort();
        for n in names {
            artifacts.push((format!("{cmd}/{n}"), std::fs::read(dir.join(cmd).join(&n)).unwrap()));
        }
    }
    artifacts
}
