//! Posterior ensembles of skews: the fuzzy smile raster and the
//! posterior-averaged implied distribution.

use crate::bayes::PosteriorGrid;
use crate::error::{ensure, Error, Result};
use crate::implied::{self, classify, validate_axis, DensityCurve, Method, PointFlag};
use crate::par;
use crate::pricing::MarketEnv;

/// Share of posterior mass covered by the cells an ensemble operation uses.
pub const ENSEMBLE_MASS: f64 = 0.999;
/// Relative padding of the auto-ranged volatility axis.
pub const VOL_RANGE_PADDING: f64 = 0.05;
/// Minimum number of volatility bins in a fuzzy smile.
pub const MIN_VOL_BINS: usize = 10;
/// Skipped mass at a single point above which an averaged density is suspect.
pub const SKIPPED_MASS_WARNING: f64 = 0.01;

/// Strike × volatility probability raster. Each column is the posterior
/// distribution of σ(x) at one moneyness, so columns sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyGrid {
    pub x_axis: Vec<f64>,
    /// `vol_bins + 1` increasing bin edges.
    pub vol_edges: Vec<f64>,
    /// `mass[column][bin]`
    pub mass: Vec<Vec<f64>>,
    /// Mass per column whose volatility fell outside the edges and was
    /// folded into the first or last bin.
    pub clamped: Vec<f64>,
}

impl FuzzyGrid {
    pub fn vol_bins(&self) -> usize {
        self.vol_edges.len() - 1
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.mass.iter().map(|c| c.iter().sum()).collect()
    }

    /// Shannon entropy (nats) of one column.
    pub fn column_entropy(&self, column: usize) -> f64 {
        self.mass[column].iter().filter(|&&m| m > 0.0).map(|&m| -m * m.ln()).sum()
    }

    pub fn entropies(&self) -> Vec<f64> {
        (0..self.mass.len()).map(|i| self.column_entropy(i)).collect()
    }
}

fn auto_vol_range(grid: &PosteriorGrid, x_axis: &[f64]) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for idx in grid.top_cells(ENSEMBLE_MASS) {
        let skew = grid.cell(idx);
        for &x in x_axis {
            let v = skew.vol_at(x);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if hi <= lo {
        return Err(Error::EmptyRange { value: lo });
    }
    let pad = VOL_RANGE_PADDING * (hi - lo);
    Ok((lo - pad, hi + pad))
}

/// Bin the skew volatility of every posterior cell at each moneyness.
pub fn fuzzy_smile(
    grid: &PosteriorGrid,
    x_axis: &[f64],
    vol_bins: usize,
    vol_range: Option<(f64, f64)>,
) -> Result<FuzzyGrid> {
    ensure(vol_bins >= MIN_VOL_BINS, "vol_bins", vol_bins as f64, "need at least 10 bins")?;
    ensure(!x_axis.is_empty(), "x_axis", 0.0, "must not be empty")?;
    if let Some(&x) = x_axis.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::InvalidInput { field: "x_axis", value: x, reason: "points must be positive" });
    }
    let (lo, hi) = match vol_range {
        Some((lo, hi)) if lo.is_finite() && hi.is_finite() && hi > lo => (lo, hi),
        Some((lo, hi)) => return Err(Error::InvalidRange { lo, hi }),
        None => auto_vol_range(grid, x_axis)?,
    };
    let width = (hi - lo) / vol_bins as f64;
    let mut vol_edges: Vec<f64> = (0..vol_bins).map(|k| lo + width * k as f64).collect();
    vol_edges.push(hi);

    let cells: Vec<usize> = (0..grid.len()).filter(|&i| grid.weights[i] > 0.0).collect();
    let columns = par::map_slice(x_axis, |&x| {
        let mut column = vec![0.0; vol_bins];
        let mut clamped = 0.0;
        for &idx in &cells {
            let w = grid.weights[idx];
            let v = grid.cell(idx).vol_at(x);
            let bin = if v < lo {
                clamped += w;
                0
            } else if v > hi {
                clamped += w;
                vol_bins - 1
            } else {
                (((v - lo) / width) as usize).min(vol_bins - 1)
            };
            column[bin] += w;
        }
        (column, clamped)
    });
    let (mass, clamped) = columns.into_iter().unzip();
    Ok(FuzzyGrid { x_axis: x_axis.to_vec(), vol_edges, mass, clamped })
}

/// Posterior-weighted mixture of implied distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedDensity {
    pub curve: DensityCurve,
    /// Ensemble mass left out at each point because the cell's skew had no
    /// valid volatility there.
    pub skipped_mass: Vec<f64>,
    /// Posterior mass of the cells used, before renormalization.
    pub retained_mass: f64,
    pub cells_used: usize,
}

impl AveragedDensity {
    pub fn max_skipped(&self) -> f64 {
        self.skipped_mass.iter().copied().fold(0.0, f64::max)
    }

    pub fn skip_warning(&self) -> bool {
        self.max_skipped() > SKIPPED_MASS_WARNING
    }
}

/// Average the implied density and CDF of the heaviest cells (together
/// holding [`ENSEMBLE_MASS`] of the posterior), weights renormalized over
/// those cells. Cells are summed in ascending index order.
pub fn averaged_pdf(env: &MarketEnv, grid: &PosteriorGrid, x_axis: &[f64], method: Method) -> Result<AveragedDensity> {
    validate_axis(x_axis)?;
    let mut cells = grid.top_cells(ENSEMBLE_MASS);
    cells.sort_unstable();
    let retained: f64 = cells.iter().map(|&i| grid.weights[i]).sum();
    ensure(retained > 0.0, "weights", retained, "posterior has no mass")?;
    let members: Vec<_> = cells.iter().map(|&i| (grid.cell(i), grid.weights[i] / retained)).collect();

    let points = par::map_slice(x_axis, |&x| -> Result<(f64, f64, f64)> {
        let mut pdf = 0.0;
        let mut cdf = 0.0;
        let mut skipped = 0.0;
        for (skew, w) in &members {
            let p = implied::implied_pdf(env, skew, x, method);
            let c = implied::implied_cdf(env, skew, x, method);
            match (p, c) {
                (Ok(p), Ok(c)) => {
                    pdf += w * p;
                    cdf += w * c;
                }
                (Err(Error::InvalidVol { .. }), _) | (_, Err(Error::InvalidVol { .. })) => skipped += w,
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
        }
        Ok((pdf, cdf, skipped))
    });

    let n = x_axis.len();
    let mut curve = DensityCurve {
        xs: x_axis.to_vec(),
        pdf: Vec::with_capacity(n),
        cdf: Vec::with_capacity(n),
        flags: Vec::with_capacity(n),
    };
    let mut skipped_mass = Vec::with_capacity(n);
    for point in points {
        let (p, c, s) = point?;
        let valid = members.iter().map(|m| m.1).sum::<f64>() - s;
        if valid <= 0.0 {
            curve.pdf.push(f64::NAN);
            curve.cdf.push(f64::NAN);
            curve.flags.push(PointFlag::InvalidVol);
        } else {
            curve.pdf.push(p);
            curve.cdf.push(c);
            curve.flags.push(if s > 0.0 { PointFlag::Skipped } else { classify(p, c) });
        }
        skipped_mass.push(s);
    }
    Ok(AveragedDensity { curve, skipped_mass, retained_mass: retained, cells_used: members.len() })
}
