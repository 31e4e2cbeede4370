//! Quote files and CSV exports.
//!
//! Quote files are `moneyness,vol` per line, UTF-8, with an optional header
//! line and `#` comments.

use std::fmt::Write as _;
use std::path::Path;

use crate::bayes::{Marginal1d, Marginal2d, QuoteSet};
use crate::ensemble::FuzzyGrid;
use crate::implied::{DensityCurve, PointFlag};
use crate::pricing::OptionQuote;
use crate::skew::PlausibilityReport;

pub const QUOTES_HEADER: &str = "moneyness,vol";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuoteFileError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: invalid {field}: {message}")]
    Invalid { line: usize, field: &'static str, message: String },
    #[error("{0}")]
    Io(String),
}

fn parse_field(line: usize, raw: &str, name: &str) -> Result<f64, QuoteFileError> {
    raw.trim()
        .parse::<f64>()
        .map_err(|e| QuoteFileError::Parse { line, message: format!("cannot read {name} '{}': {e}", raw.trim()) })
}

pub fn parse_quotes(text: &str) -> Result<QuoteSet, QuoteFileError> {
    let mut quotes = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if quotes.is_empty() && trimmed.replace(' ', "") == QUOTES_HEADER {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 2 {
            return Err(QuoteFileError::Parse { line, message: format!("expected 2 fields, found {}", fields.len()) });
        }
        let x = parse_field(line, fields[0], "moneyness")?;
        let v = parse_field(line, fields[1], "vol")?;
        let quote = OptionQuote::new(x, v).map_err(|e| match e {
            crate::Error::InvalidInput { field, reason, value } => {
                QuoteFileError::Invalid { line, field, message: format!("{value} {reason}") }
            }
            other => QuoteFileError::Invalid { line, field: "quote", message: other.to_string() },
        })?;
        quotes.push(quote);
    }
    Ok(QuoteSet::new(quotes))
}

pub fn load_quotes(path: &Path) -> Result<QuoteSet, QuoteFileError> {
    let text = std::fs::read_to_string(path).map_err(|e| QuoteFileError::Io(format!("{}: {e}", path.display())))?;
    parse_quotes(&text)
}

pub fn format_quotes(quotes: &QuoteSet) -> String {
    let mut out = format!("{QUOTES_HEADER}\n");
    for q in &quotes.quotes {
        let _ = writeln!(out, "{},{}", q.moneyness, q.vol);
    }
    out
}

pub fn save_quotes(path: &Path, quotes: &QuoteSet) -> std::io::Result<()> {
    std::fs::write(path, format_quotes(quotes))
}

/// `x,pdf,cdf`, plus a `flag` column when any point is flagged.
pub fn curve_csv(curve: &DensityCurve) -> String {
    let flagged = !curve.all_ok();
    let mut out = String::from(if flagged { "x,pdf,cdf,flag\n" } else { "x,pdf,cdf\n" });
    for i in 0..curve.len() {
        let _ = write!(out, "{},{},{}", curve.xs[i], curve.pdf[i], curve.cdf[i]);
        if flagged {
            out.push(',');
            out.push_str(curve.flags[i].as_str());
        }
        out.push('\n');
    }
    out
}

/// Inverse of [`curve_csv`].
pub fn parse_curve_csv(text: &str) -> Result<DensityCurve, QuoteFileError> {
    let mut curve = DensityCurve { xs: vec![], pdf: vec![], cdf: vec![], flags: vec![] };
    for (i, raw) in text.lines().enumerate().skip(1) {
        let line = i + 1;
        let f: Vec<&str> = raw.split(',').collect();
        if f.len() < 3 {
            return Err(QuoteFileError::Parse { line, message: "expected x,pdf,cdf".into() });
        }
        curve.xs.push(parse_field(line, f[0], "x")?);
        curve.pdf.push(parse_field(line, f[1], "pdf")?);
        curve.cdf.push(parse_field(line, f[2], "cdf")?);
        curve.flags.push(match f.get(3).copied() {
            None | Some("ok") => PointFlag::Ok,
            Some("implausible") => PointFlag::Implausible,
            Some("invalid_vol") => PointFlag::InvalidVol,
            Some("skipped") => PointFlag::Skipped,
            Some(other) => return Err(QuoteFileError::Parse { line, message: format!("unknown flag '{other}'") }),
        });
    }
    Ok(curve)
}

/// Long form `x,vol_bin_low,vol_bin_high,mass`.
pub fn fuzzy_csv(grid: &FuzzyGrid) -> String {
    let mut out = String::from("x,vol_bin_low,vol_bin_high,mass\n");
    for (x, column) in grid.x_axis.iter().zip(&grid.mass) {
        for (k, m) in column.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{}", x, grid.vol_edges[k], grid.vol_edges[k + 1], m);
        }
    }
    out
}

pub fn marginal_1d_csv(m: &Marginal1d) -> String {
    let mut out = format!("{},weight\n", m.param);
    for (x, w) in m.axis.iter().zip(&m.weights) {
        let _ = writeln!(out, "{x},{w}");
    }
    out
}

/// `param1,param2,weight`, with the actual parameter names in the header.
pub fn marginal_2d_csv(m: &Marginal2d) -> String {
    let mut out = format!("{},{},weight\n", m.params.0, m.params.1);
    for (i, p) in m.axes.0.iter().enumerate() {
        for (j, q) in m.axes.1.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", p, q, m.get(i, j));
        }
    }
    out
}

pub fn violations_csv(report: &PlausibilityReport) -> String {
    let mut out = String::from("x,kind,value\n");
    for v in &report.violations {
        let _ = writeln!(out, "{},{},{}", v.x, v.kind.as_str(), v.value);
    }
    out
}
