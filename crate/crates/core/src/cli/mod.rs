//! Command-line driver. Each subcommand maps onto one library operation and
//! writes CSV artifacts plus a `manifest.txt` into the output directory.
//!
//! Exit codes: 0 success, 1 validation error (bad input, config, or a
//! failed plausibility check), 2 numerical failure.

pub mod config;
pub mod io;
pub mod synth;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::bayes::{self, Param, ParamBox, PosteriorGrid, QuoteSet};
use crate::ensemble;
use crate::error::Error;
use crate::implied::{self, Method};
use crate::skew::{self, linspace, SkewParams};

pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "skewdist", version, about = "Implied distributions and Bayesian skew estimation")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Quote file (`moneyness,vol` CSV).
    #[arg(long, global = true)]
    pub quotes: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Skew coefficients `a,b,c`.
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_skew)]
    pub skew: Option<SkewParams>,
    /// Differentiation method: analytic or fd.
    #[arg(long, global = true, default_value = "analytic")]
    pub method: Method,
    /// Seed for synthetic data; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Least-squares quadratic fit of the quotes.
    Fit,
    /// Implied density and CDF of one skew (`--skew`, or the fit of `--quotes`).
    Pdf,
    /// Grid posterior over (a, b, c) and its marginals.
    Posterior,
    /// Fuzzy smile raster from the posterior.
    Fuzzy,
    /// Posterior-averaged implied density, with the best-fit density.
    AvgPdf,
    /// Plausibility check of a skew.
    Check,
    /// Write synthetic quotes from a known skew plus seeded noise.
    Synth,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Fit => "fit",
            Command::Pdf => "pdf",
            Command::Posterior => "posterior",
            Command::Fuzzy => "fuzzy",
            Command::AvgPdf => "avg-pdf",
            Command::Check => "check",
            Command::Synth => "synth",
        }
    }
}

pub fn parse_skew(s: &str) -> Result<SkewParams, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected a,b,c, got '{s}'"));
    }
    let mut v = [0.0; 3];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}"))?;
    }
    SkewParams::new(v[0], v[1], v[2]).map_err(|e| e.to_string())
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidVol { .. } | Error::ExactFit | Error::NonFiniteDensity { .. } | Error::EmptyRange { .. } => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<io::QuoteFileError> for CliError {
    fn from(e: io::QuoteFileError) -> Self {
        CliError::Validation(format!("quote file: {e}"))
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Validation(format!("{}: {e}", path.display()))
}

/// Collected outputs of one run.
struct Run<'a> {
    cli: &'a Cli,
    cfg: RunConfig,
    files: Vec<(String, String)>,
    notes: Vec<(String, String)>,
}

impl Run<'_> {
    fn file(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.to_string(), value.to_string()));
    }

    fn quotes(&self) -> Result<QuoteSet, CliError> {
        let path = self
            .cli
            .quotes
            .as_ref()
            .ok_or_else(|| CliError::Validation("this subcommand needs --quotes <path>".into()))?;
        Ok(io::load_quotes(path)?)
    }

    fn x_axis(&self) -> Result<Vec<f64>, CliError> {
        let g = &self.cfg.grid;
        if !(g.x_min > 0.0 && g.x_max > g.x_min && g.n >= 3) {
            return Err(CliError::Validation(format!(
                "grid needs 0 < x_min < x_max and n >= 3, got [{}, {}] n={}",
                g.x_min, g.x_max, g.n
            )));
        }
        Ok(linspace(g.x_min, g.x_max, g.n))
    }

    fn posterior(&mut self, quotes: &QuoteSet) -> Result<PosteriorGrid, CliError> {
        let bounds = match self.cfg.bounds() {
            Some(b) => b,
            None => ParamBox::default_for(quotes)?,
        };
        let grid = bayes::build_posterior(quotes, &bounds, self.cfg.posterior.resolution)?;
        for p in Param::ALL {
            let (lo, hi) = bounds.range(p);
            self.note(&format!("posterior.bounds.{p}"), format!("{lo},{hi}"));
        }
        self.note("posterior.log_norm", grid.log_norm);
        self.note("posterior.boundary_mass", grid.boundary_mass);
        if grid.boundary_warning() {
            eprintln!(
                "warning: {:.2}% of posterior mass lies on the prior box boundary; widen the bounds",
                100.0 * grid.boundary_mass
            );
        }
        Ok(grid)
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let started = Instant::now();
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(CliError::Validation)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let mut run = Run { cli, cfg, files: Vec::new(), notes: Vec::new() };
    let outcome = dispatch(&mut run);

    std::fs::create_dir_all(&cli.out).map_err(|e| io_err(&cli.out, e))?;
    for (name, contents) in &run.files {
        let path = cli.out.join(name);
        std::fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
    }
    let manifest = manifest(&run, &outcome, started.elapsed().as_secs_f64());
    let path = cli.out.join("manifest.txt");
    std::fs::write(&path, manifest).map_err(|e| io_err(&path, e))?;
    outcome
}

fn manifest(run: &Run<'_>, outcome: &Result<(), CliError>, elapsed: f64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "command={}", run.cli.command.name());
    let _ = writeln!(out, "version={}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "parallel={}", cfg!(feature = "parallel"));
    let _ = writeln!(out, "method={}", match run.cli.method {
        Method::Analytic => "analytic",
        Method::FiniteDifference => "fd",
    });
    if let Some(q) = &run.cli.quotes {
        let _ = writeln!(out, "quotes={}", q.display());
    }
    if let Some(s) = &run.cli.skew {
        let _ = writeln!(out, "skew={},{},{}", s.a, s.b, s.c);
    }
    for (k, v) in run.cfg.echo() {
        let _ = writeln!(out, "{k}={v}");
    }
    for (k, v) in &run.notes {
        let _ = writeln!(out, "{k}={v}");
    }
    let files: Vec<&str> = run.files.iter().map(|f| f.0.as_str()).collect();
    let _ = writeln!(out, "outputs={}", files.join(","));
    let _ = writeln!(out, "status={}", match outcome {
        Ok(()) => "ok".to_string(),
        Err(e) => format!("exit {}", e.exit_code()),
    });
    let _ = writeln!(out, "elapsed_seconds={elapsed:.6}");
    out
}

fn dispatch(run: &mut Run<'_>) -> Result<(), CliError> {
    let env = run.cfg.market_env()?;
    let method = run.cli.method;
    match run.cli.command {
        Command::Fit => {
            let quotes = run.quotes()?;
            let reg = bayes::regression(&quotes)?;
            let se = reg.std_errors();
            let p = reg.params.to_array();
            let mut csv = String::from("param,estimate,std_error\n");
            for (i, name) in ["a", "b", "c"].iter().enumerate() {
                println!("{name}={}", p[i]);
                let _ = writeln!(csv, "{name},{},{}", p[i], se[i]);
            }
            run.note("fit.ssr", reg.ssr);
            run.file("fit.csv", csv);
        }
        Command::Pdf => {
            let skew = match run.cli.skew {
                Some(s) => s,
                None => bayes::least_squares_fit(&run.quotes()?)?,
            };
            let xs = run.x_axis()?;
            let curve = implied::density_on_axis(&env, &skew, &xs, method)?;
            if curve.all_ok() {
                let m = implied::distribution_moments(&curve)?;
                run.note("moments.mass", m.mass);
                run.note("moments.mean", m.mean);
                run.note("moments.variance", m.variance);
                if m.truncated() {
                    eprintln!("warning: density at the grid ends exceeds 1e-8; moments are truncated");
                }
            } else {
                eprintln!("warning: some grid points are flagged; see the flag column");
            }
            run.file("pdf.csv", io::curve_csv(&curve));
        }
        Command::Posterior => {
            let quotes = run.quotes()?;
            let fit = bayes::least_squares_fit(&quotes)?;
            let grid = run.posterior(&quotes)?;
            let (_, mode) = grid.mode();
            println!("fit  a={} b={} c={}", fit.a, fit.b, fit.c);
            println!("mode a={} b={} c={}", mode.a, mode.b, mode.c);
            for p in Param::ALL {
                let m = bayes::marginal_1d(&grid, p);
                run.file(&format!("marginal_{p}.csv"), io::marginal_1d_csv(&m));
            }
            for pair in [(Param::A, Param::B), (Param::B, Param::C), (Param::A, Param::C)] {
                let m = bayes::marginal_2d(&grid, pair)?;
                run.file(&format!("marginal_{}{}.csv", pair.0, pair.1), io::marginal_2d_csv(&m));
            }
        }
        Command::Fuzzy => {
            let quotes = run.quotes()?;
            let grid = run.posterior(&quotes)?;
            let xs = run.x_axis()?;
            let range = run.cfg.fuzzy.vol_range.map(|[lo, hi]| (lo, hi));
            let fuzzy = ensemble::fuzzy_smile(&grid, &xs, run.cfg.fuzzy.vol_bins, range)?;
            let clamped = fuzzy.clamped.iter().copied().fold(0.0, f64::max);
            run.note("fuzzy.max_clamped_mass", clamped);
            if clamped > 0.0 {
                eprintln!("warning: up to {clamped:.3e} of a column's mass fell outside the vol range");
            }
            run.file("fuzzy.csv", io::fuzzy_csv(&fuzzy));
        }
        Command::AvgPdf => {
            let quotes = run.quotes()?;
            let fit = bayes::least_squares_fit(&quotes)?;
            let grid = run.posterior(&quotes)?;
            let xs = run.x_axis()?;
            let avg = ensemble::averaged_pdf(&env, &grid, &xs, method)?;
            let best = implied::density_on_axis(&env, &fit, &xs, method)?;
            run.note("avg_pdf.cells_used", avg.cells_used);
            run.note("avg_pdf.retained_mass", avg.retained_mass);
            run.note("avg_pdf.max_skipped_mass", avg.max_skipped());
            if avg.skip_warning() {
                eprintln!("warning: more than 1% of the ensemble was skipped at some grid points");
            }
            run.file("avg_pdf.csv", io::curve_csv(&avg.curve));
            run.file("bestfit_pdf.csv", io::curve_csv(&best));
        }
        Command::Check => {
            let skew = run
                .cli
                .skew
                .ok_or_else(|| CliError::Validation("check needs --skew a,b,c".into()))?;
            let c = run.cfg.check.clone();
            let report = skew::plausibility_check(&env, &skew, (c.x_min, c.x_max), c.samples)?;
            run.note("check.violations", report.violations.len());
            run.file("violations.csv", io::violations_csv(&report));
            if !report.is_plausible() {
                let mut listing = String::new();
                for v in &report.violations {
                    let _ = writeln!(listing, "x={} {} value={}", v.x, v.kind.as_str(), v.value);
                }
                // a closed pipe (e.g. `| head`) is not an error here
                let _ = std::io::Write::write_all(&mut std::io::stdout().lock(), listing.as_bytes());
                return Err(CliError::Validation(format!(
                    "skew is implausible at {} of {} sampled points",
                    report.violations.len(),
                    report.samples.len()
                )));
            }
            println!("plausible on [{}, {}] ({} samples)", c.x_min, c.x_max, c.samples);
        }
        Command::Synth => {
            let truth = match run.cli.skew {
                Some(s) => s,
                None => run.cfg.synth_skew()?,
            };
            let s = &run.cfg.synth;
            let quotes = synth::synthetic_quotes(&truth, s.n_quotes, (s.x_min, s.x_max), s.noise_sd, run.cfg.seed)?;
            run.file("quotes.csv", io::format_quotes(&quotes));
        }
    }
    Ok(())
}
