//! Least-squares fit and grid posterior for the quadratic skew.
//!
//! Quotes are modelled as the skew plus independent Gaussian residuals with
//! a common unknown scale. Integrating the scale out under a 1/s prior
//! leaves a likelihood proportional to SSR^{-n/2}. With a flat prior on
//! (a, b, c) inside a box, the posterior on a uniform grid is that
//! likelihood normalized over the cells.

use std::fmt;
use std::str::FromStr;

use crate::error::{ensure, Error, Result};
use crate::par;
use crate::pricing::OptionQuote;
use crate::skew::{linspace, SkewParams};

/// Default grid resolution along each parameter axis.
pub const DEFAULT_RESOLUTION: usize = 41;
/// Minimum grid resolution along each axis.
pub const MIN_RESOLUTION: usize = 11;
/// Half-width of the default prior box, in regression standard errors.
pub const DEFAULT_BOX_STD_ERRORS: f64 = 6.0;
/// Lower floor for the at-the-money vol axis of a default box.
pub const MIN_ATM_VOL: f64 = 1e-6;
/// Posterior mass on the faces of the box above which the box is too small.
pub const BOUNDARY_MASS_WARNING: f64 = 0.01;

/// Observed (moneyness, vol) pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuoteSet {
    pub quotes: Vec<OptionQuote>,
}

impl QuoteSet {
    pub fn new(quotes: Vec<OptionQuote>) -> Self {
        Self { quotes }
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        pairs
            .iter()
            .map(|&(x, v)| OptionQuote::new(x, v))
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    pub fn len(&self) -> usize {
        self.quotes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quotes.is_empty()
    }

    pub fn distinct_moneyness(&self) -> usize {
        let mut xs: Vec<f64> = self.quotes.iter().map(|q| q.moneyness).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs.len()
    }

    pub fn moneyness_range(&self) -> Option<(f64, f64)> {
        let mut it = self.quotes.iter().map(|q| q.moneyness);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), x| (lo.min(x), hi.max(x))))
    }

    // Sorted copy, so sums over quotes do not depend on input order.
    fn canonical(&self) -> Vec<OptionQuote> {
        let mut q = self.quotes.clone();
        q.sort_by(|l, r| l.moneyness.total_cmp(&r.moneyness).then(l.vol.total_cmp(&r.vol)));
        q
    }

    fn check_rank(&self) -> Result<()> {
        let distinct = self.distinct_moneyness();
        if distinct < 3 {
            return Err(Error::RankDeficient { distinct });
        }
        Ok(())
    }

    fn check_posterior(&self) -> Result<()> {
        if self.len() < 4 {
            return Err(Error::TooFewQuotes { needed: 4, got: self.len() });
        }
        self.check_rank()
    }
}

/// Result of the linear regression of vol on (1, x-1, (x-1)²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regression {
    pub params: SkewParams,
    pub ssr: f64,
    pub n: usize,
    /// (XᵀX)⁻¹ for the design matrix.
    pub unscaled_cov: [[f64; 3]; 3],
}

impl Regression {
    /// Classical standard errors with the SSR/(n-3) scale estimate. Zero
    /// when the fit is exact, NaN when n = 3.
    pub fn std_errors(&self) -> [f64; 3] {
        let dof = self.n as f64 - 3.0;
        let s2 = if dof > 0.0 { self.ssr / dof } else { f64::NAN };
        [0, 1, 2].map(|i| (s2 * self.unscaled_cov[i][i]).sqrt())
    }
}

fn design_row(x: f64) -> [f64; 3] {
    let u = x - 1.0;
    [1.0, u, u * u]
}

/// Sum of squared residuals of `skew` against the quotes, in the given order.
fn ssr_of(quotes: &[OptionQuote], skew: &SkewParams) -> f64 {
    quotes
        .iter()
        .map(|q| {
            let r = q.vol - skew.vol_at(q.moneyness);
            r * r
        })
        .sum()
}

/// Least squares through Householder QR of the n×3 design matrix.
#[allow(clippy::needless_range_loop)]
pub fn regression(quotes: &QuoteSet) -> Result<Regression> {
    quotes.check_rank()?;
    let sorted = quotes.canonical();
    let n = sorted.len();
    let mut m: Vec<[f64; 3]> = sorted.iter().map(|q| design_row(q.moneyness)).collect();
    let mut y: Vec<f64> = sorted.iter().map(|q| q.vol).collect();

    let scale = m.iter().map(|r| r.iter().fold(0.0f64, |a, v| a.max(v.abs()))).fold(0.0f64, f64::max);
    for k in 0..3 {
        let norm = (k..n).map(|i| m[i][k] * m[i][k]).sum::<f64>().sqrt();
        if norm <= 1e-12 * scale {
            return Err(Error::RankDeficient { distinct: quotes.distinct_moneyness() });
        }
        let alpha = if m[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..n).map(|i| m[i][k]).collect();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|t| t * t).sum();
        for j in k..3 {
            let s: f64 = (k..n).map(|i| v[i - k] * m[i][j]).sum();
            let f = 2.0 * s / vv;
            for i in k..n {
                m[i][j] -= f * v[i - k];
            }
        }
        let s: f64 = (k..n).map(|i| v[i - k] * y[i]).sum();
        let f = 2.0 * s / vv;
        for i in k..n {
            y[i] -= f * v[i - k];
        }
    }

    // Back substitution R θ = Qᵀy and R⁻¹ for the covariance.
    let mut theta = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|j| m[i][j] * theta[j]).sum();
        theta[i] = (y[i] - s) / m[i][i];
    }
    let mut rinv = [[0.0; 3]; 3];
    for col in 0..3 {
        for i in (0..=col).rev() {
            let rhs = if i == col { 1.0 } else { 0.0 };
            let s: f64 = (i + 1..=col).map(|j| m[i][j] * rinv[j][col]).sum();
            rinv[i][col] = (rhs - s) / m[i][i];
        }
    }
    let mut cov = [[0.0; 3]; 3];
    for (i, row) in cov.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| rinv[i][k] * rinv[j][k]).sum();
        }
    }

    let params = SkewParams::new(theta[0], theta[1], theta[2])?;
    Ok(Regression { params, ssr: ssr_of(&sorted, &params), n, unscaled_cov: cov })
}

/// Best-fit quadratic skew in the least-squares sense.
pub fn least_squares_fit(quotes: &QuoteSet) -> Result<SkewParams> {
    regression(quotes).map(|r| r.params)
}

/// Scale-marginalized log likelihood, -(n/2) ln SSR, up to a constant.
/// Returns [`Error::ExactFit`] when the skew reproduces every quote.
pub fn log_marginal_likelihood(quotes: &QuoteSet, skew: &SkewParams) -> Result<f64> {
    quotes.check_posterior()?;
    let ssr = ssr_of(&quotes.canonical(), skew);
    log_likelihood_from_ssr(ssr, quotes.len())
}

fn log_likelihood_from_ssr(ssr: f64, n: usize) -> Result<f64> {
    if ssr > 0.0 {
        Ok(-0.5 * n as f64 * ssr.ln())
    } else {
        Err(Error::ExactFit)
    }
}

/// One of the three skew coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Param {
    A,
    B,
    C,
}

impl Param {
    pub const ALL: [Param; 3] = [Param::A, Param::B, Param::C];

    pub fn index(self) -> usize {
        match self {
            Param::A => 0,
            Param::B => 1,
            Param::C => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Param::A => "a",
            Param::B => "b",
            Param::C => "c",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "a" => Ok(Param::A),
            "b" => Ok(Param::B),
            "c" => Ok(Param::C),
            other => Err(format!("unknown parameter '{other}'")),
        }
    }
}

/// Closed intervals bounding each coefficient: the support of the flat prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBox {
    pub a: (f64, f64),
    pub b: (f64, f64),
    pub c: (f64, f64),
}

impl ParamBox {
    pub fn range(&self, p: Param) -> (f64, f64) {
        match p {
            Param::A => self.a,
            Param::B => self.b,
            Param::C => self.c,
        }
    }

    pub fn contains(&self, s: &SkewParams) -> bool {
        let inside = |(lo, hi): (f64, f64), v: f64| lo <= v && v <= hi;
        inside(self.a, s.a) && inside(self.b, s.b) && inside(self.c, s.c)
    }

    fn validate(&self) -> Result<()> {
        for p in Param::ALL {
            let (lo, hi) = self.range(p);
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::InvalidRange { lo, hi });
            }
        }
        ensure(self.a.0 > 0.0, "a", self.a.0, "prior box must keep the at-the-money vol positive")
    }

    /// Box of `k` standard errors around the regression estimate, with the
    /// at-the-money vol floored at [`MIN_ATM_VOL`].
    pub fn around_fit(fit: &Regression, k: f64) -> Result<Self> {
        let se = fit.std_errors();
        let p = fit.params.to_array();
        let mut r = [(0.0, 0.0); 3];
        for i in 0..3 {
            let half = k * se[i];
            if !(half.is_finite() && half > 0.0) {
                return Err(Error::InvalidInput {
                    field: "bounds",
                    value: half,
                    reason: "cannot derive a prior box from an exact or saturated fit; give explicit bounds",
                });
            }
            r[i] = (p[i] - half, p[i] + half);
        }
        r[0].0 = r[0].0.max(MIN_ATM_VOL);
        let b = Self { a: r[0], b: r[1], c: r[2] };
        b.validate()?;
        Ok(b)
    }

    /// The default prior box for a quote set.
    pub fn default_for(quotes: &QuoteSet) -> Result<Self> {
        Self::around_fit(&regression(quotes)?, DEFAULT_BOX_STD_ERRORS)
    }
}

/// Normalized posterior weights on a uniform (a, b, c) grid.
///
/// Weights are stored with `c` varying fastest: cell (i, j, k) lives at
/// `(i * nb + j) * nc + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGrid {
    pub a_axis: Vec<f64>,
    pub b_axis: Vec<f64>,
    pub c_axis: Vec<f64>,
    pub weights: Vec<f64>,
    /// Log of the sum of unnormalized likelihoods; +inf for an exact fit.
    pub log_norm: f64,
    /// Posterior mass on the faces of the box.
    pub boundary_mass: f64,
}

impl PosteriorGrid {
    /// Build a grid from explicit axes and unnormalized non-negative weights.
    pub fn from_parts(a_axis: Vec<f64>, b_axis: Vec<f64>, c_axis: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        for axis in [&a_axis, &b_axis, &c_axis] {
            ensure(!axis.is_empty(), "axis", 0.0, "must not be empty")?;
            if axis.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
                return Err(Error::InvalidInput { field: "axis", value: f64::NAN, reason: "must be strictly increasing" });
            }
        }
        ensure(a_axis[0] > 0.0, "a_axis", a_axis[0], "at-the-money vol must be positive")?;
        let n = a_axis.len() * b_axis.len() * c_axis.len();
        ensure(weights.len() == n, "weights", weights.len() as f64, "length must match the grid")?;
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidInput { field: "weights", value: *w, reason: "must be finite and non-negative" });
        }
        let total: f64 = weights.iter().sum();
        ensure(total > 0.0, "weights", total, "must not all be zero")?;
        let mut grid = Self {
            a_axis,
            b_axis,
            c_axis,
            weights: weights.iter().map(|w| w / total).collect(),
            log_norm: total.ln(),
            boundary_mass: 0.0,
        };
        grid.boundary_mass = grid.face_mass();
        Ok(grid)
    }

    /// Posterior concentrated on a single skew.
    pub fn delta(skew: SkewParams) -> Self {
        Self {
            a_axis: vec![skew.a],
            b_axis: vec![skew.b],
            c_axis: vec![skew.c],
            weights: vec![1.0],
            log_norm: 0.0,
            boundary_mass: 0.0,
        }
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.a_axis.len(), self.b_axis.len(), self.c_axis.len()]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn axis(&self, p: Param) -> &[f64] {
        match p {
            Param::A => &self.a_axis,
            Param::B => &self.b_axis,
            Param::C => &self.c_axis,
        }
    }

    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let [_, nb, nc] = self.shape();
        [idx / (nb * nc), (idx / nc) % nb, idx % nc]
    }

    pub fn cell(&self, idx: usize) -> SkewParams {
        let [i, j, k] = self.unravel(idx);
        SkewParams { a: self.a_axis[i], b: self.b_axis[j], c: self.c_axis[k] }
    }

    /// Highest-weight cell; ties go to the lowest index.
    pub fn mode(&self) -> (usize, SkewParams) {
        let mut best = 0;
        for (i, w) in self.weights.iter().enumerate() {
            if *w > self.weights[best] {
                best = i;
            }
        }
        (best, self.cell(best))
    }

    /// Posterior mean and standard deviation of each coefficient.
    pub fn mean_std(&self) -> [(f64, f64); 3] {
        Param::ALL.map(|p| {
            let m = marginal_1d(self, p);
            let mean: f64 = m.axis.iter().zip(&m.weights).map(|(x, w)| x * w).sum();
            let var: f64 = m.axis.iter().zip(&m.weights).map(|(x, w)| (x - mean) * (x - mean) * w).sum();
            (mean, var.sqrt())
        })
    }

    pub fn boundary_warning(&self) -> bool {
        self.boundary_mass > BOUNDARY_MASS_WARNING
    }

    /// Indices of the highest-weight cells whose weights add up to at least
    /// `fraction`, heaviest first, ties broken by index.
    pub fn top_cells(&self, fraction: f64) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).filter(|&i| self.weights[i] > 0.0).collect();
        order.sort_by(|&l, &r| self.weights[r].total_cmp(&self.weights[l]).then(l.cmp(&r)));
        let mut acc = 0.0;
        let mut out = Vec::new();
        for i in order {
            out.push(i);
            acc += self.weights[i];
            if acc >= fraction {
                break;
            }
        }
        out
    }

    fn face_mass(&self) -> f64 {
        let [na, nb, nc] = self.shape();
        let on_face = |n: usize, i: usize| n > 1 && (i == 0 || i == n - 1);
        (0..self.len())
            .filter(|&idx| {
                let [i, j, k] = self.unravel(idx);
                on_face(na, i) || on_face(nb, j) || on_face(nc, k)
            })
            .map(|idx| self.weights[idx])
            .sum()
    }
}

/// Evaluate the posterior on a uniform grid over `bounds` with
/// `resolution = [na, nb, nc]` points per axis.
pub fn build_posterior(quotes: &QuoteSet, bounds: &ParamBox, resolution: [usize; 3]) -> Result<PosteriorGrid> {
    quotes.check_posterior()?;
    bounds.validate()?;
    for n in resolution {
        ensure(n >= MIN_RESOLUTION, "resolution", n as f64, "need at least 11 points per axis")?;
    }
    let fit = least_squares_fit(quotes)?;
    if !bounds.contains(&fit) {
        return Err(Error::InvalidInput {
            field: "bounds",
            value: f64::NAN,
            reason: "prior box must contain the least-squares fit",
        });
    }

    let sorted = quotes.canonical();
    let n_quotes = sorted.len();
    let [na, nb, nc] = resolution;
    let a_axis = linspace(bounds.a.0, bounds.a.1, na);
    let b_axis = linspace(bounds.b.0, bounds.b.1, nb);
    let c_axis = linspace(bounds.c.0, bounds.c.1, nc);

    let ssr: Vec<f64> = par::map_indexed(na * nb * nc, |idx| {
        let skew = SkewParams { a: a_axis[idx / (nb * nc)], b: b_axis[(idx / nc) % nb], c: c_axis[idx % nc] };
        ssr_of(&sorted, &skew)
    });

    let mut grid = PosteriorGrid {
        a_axis,
        b_axis,
        c_axis,
        weights: Vec::new(),
        log_norm: 0.0,
        boundary_mass: 0.0,
    };

    if ssr.contains(&0.0) {
        // The likelihood diverges on exact fits; share the mass among them.
        let count = ssr.iter().filter(|&&s| s == 0.0).count() as f64;
        grid.weights = ssr.iter().map(|&s| if s == 0.0 { 1.0 / count } else { 0.0 }).collect();
        grid.log_norm = f64::INFINITY;
    } else {
        let half_n = 0.5 * n_quotes as f64;
        let log_lik: Vec<f64> = ssr.iter().map(|s| -half_n * s.ln()).collect();
        let max = log_lik.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let unnorm: Vec<f64> = log_lik.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = unnorm.iter().sum();
        grid.weights = unnorm.iter().map(|w| w / total).collect();
        grid.log_norm = max + total.ln();
    }
    grid.boundary_mass = grid.face_mass();
    Ok(grid)
}

/// Posterior with the default box and resolution.
pub fn build_default_posterior(quotes: &QuoteSet) -> Result<PosteriorGrid> {
    let bounds = ParamBox::default_for(quotes)?;
    build_posterior(quotes, &bounds, [DEFAULT_RESOLUTION; 3])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Marginal1d {
    pub param: Param,
    pub axis: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Two-parameter marginal. `weights[i * axes.1.len() + j]` is the mass at
/// `(axes.0[i], axes.1[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal2d {
    pub params: (Param, Param),
    pub axes: (Vec<f64>, Vec<f64>),
    pub weights: Vec<f64>,
}

impl Marginal2d {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.axes.1.len() + j]
    }

    /// Sum out the second parameter.
    pub fn sum_second(&self) -> Vec<f64> {
        let n2 = self.axes.1.len();
        self.weights.chunks(n2).map(|row| row.iter().sum()).collect()
    }

    /// Sum out the first parameter.
    pub fn sum_first(&self) -> Vec<f64> {
        let n2 = self.axes.1.len();
        let mut out = vec![0.0; n2];
        for row in self.weights.chunks(n2) {
            for (o, w) in out.iter_mut().zip(row) {
                *o += w;
            }
        }
        out
    }
}

/// Integrate the posterior down to a single parameter.
pub fn marginal_1d(grid: &PosteriorGrid, keep: Param) -> Marginal1d {
    let axis = grid.axis(keep).to_vec();
    let mut weights = vec![0.0; axis.len()];
    for (idx, w) in grid.weights.iter().enumerate() {
        weights[grid.unravel(idx)[keep.index()]] += w;
    }
    Marginal1d { param: keep, axis, weights }
}

/// Integrate out the parameter not in `keep`.
pub fn marginal_2d(grid: &PosteriorGrid, keep: (Param, Param)) -> Result<Marginal2d> {
    let (p, q) = keep;
    if p == q {
        return Err(Error::InvalidInput {
            field: "keep",
            value: p.index() as f64,
            reason: "marginal needs two different parameters",
        });
    }
    let (ax1, ax2) = (grid.axis(p).to_vec(), grid.axis(q).to_vec());
    let n2 = ax2.len();
    let mut weights = vec![0.0; ax1.len() * n2];
    for (idx, w) in grid.weights.iter().enumerate() {
        let ijk = grid.unravel(idx);
        weights[ijk[p.index()] * n2 + ijk[q.index()]] += w;
    }
    Ok(Marginal2d { params: keep, axes: (ax1, ax2), weights })
}
