//! Discrete temporal probability: the time grid, probability mass vectors
//! over it, and the triangular densities used to build them.
//!
//! Conventions used throughout the crate:
//!
//! * bin `k` covers `[origin + k·step, origin + (k+1)·step)`;
//! * cumulative distributions are evaluated at bin edges and interpolated
//!   linearly inside a bin, so `F` is continuous;
//! * expectations are taken at bin midpoints.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used when comparing times against grid edges.
const EDGE_EPS: f64 = 1e-9;

/// Discretized temporal horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub origin: f64,
    pub step: f64,
    pub bins: usize,
}

impl TimeGrid {
    pub fn new(origin: f64, step: f64, bins: usize) -> Result<Self> {
        let grid = Self { origin, step, bins };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::Invalid(format!("grid step must be > 0, got {}", self.step)));
        }
        if self.bins == 0 {
            return Err(Error::Invalid("grid must have at least one bin".into()));
        }
        if !self.origin.is_finite() {
            return Err(Error::Invalid("grid origin must be finite".into()));
        }
        Ok(())
    }

    /// Smallest grid with the given step whose span covers `[start, end]`.
    pub fn covering(start: f64, end: f64, step: f64) -> Result<Self> {
        if !(end > start) {
            return Err(Error::Invalid(format!("empty span [{start}, {end}]")));
        }
        let bins = ((end - start) / step - EDGE_EPS).ceil().max(1.0) as usize;
        Self::new(start, step, bins)
    }

    #[inline]
    pub fn bin_start(&self, k: usize) -> f64 {
        self.origin + k as f64 * self.step
    }

    #[inline]
    pub fn bin_end(&self, k: usize) -> f64 {
        self.origin + (k + 1) as f64 * self.step
    }

    #[inline]
    pub fn midpoint(&self, k: usize) -> f64 {
        self.origin + (k as f64 + 0.5) * self.step
    }

    /// End of the span (exclusive).
    #[inline]
    pub fn end(&self) -> f64 {
        self.bin_start(self.bins)
    }

    /// Index of the bin containing `t`, if any.
    pub fn bin_of(&self, t: f64) -> Option<usize> {
        if !t.is_finite() || t < self.origin || t >= self.end() {
            return None;
        }
        let k = ((t - self.origin) / self.step).floor() as usize;
        Some(k.min(self.bins - 1))
    }

    /// Whether `[lo, hi]` lies inside the grid span.
    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        let slack = EDGE_EPS * self.step;
        lo >= self.origin - slack && hi <= self.end() + slack
    }

    /// Range of bins overlapping `[lo, hi]`, clamped to the grid.
    fn overlapping_bins(&self, lo: f64, hi: f64) -> std::ops::RangeInclusive<usize> {
        let first = ((lo - self.origin) / self.step + EDGE_EPS).floor().max(0.0) as usize;
        let last = ((hi - self.origin) / self.step - EDGE_EPS).ceil().max(1.0) as usize - 1;
        first.min(self.bins - 1)..=last.min(self.bins - 1)
    }
}

/// Triangular density on `[lower, upper]` with peak at `mode`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangularSpec {
    pub lower: f64,
    pub mode: f64,
    pub upper: f64,
}

impl TriangularSpec {
    pub fn new(lower: f64, mode: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && mode.is_finite() && upper.is_finite()) {
            return Err(Error::Invalid("triangular parameters must be finite".into()));
        }
        if !(lower <= mode && mode <= upper) {
            return Err(Error::Invalid(format!(
                "triangular requires lower <= mode <= upper, got ({lower}, {mode}, {upper})"
            )));
        }
        if lower == upper {
            return Err(Error::Degenerate(format!(
                "triangular support collapsed at {lower}; use a point mass"
            )));
        }
        Ok(Self { lower, mode, upper })
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn density(&self, x: f64) -> f64 {
        let (a, c, b) = (self.lower, self.mode, self.upper);
        if x < a || x > b {
            0.0
        } else if x < c {
            2.0 * (x - a) / ((b - a) * (c - a))
        } else if x > c {
            2.0 * (b - x) / ((b - a) * (b - c))
        } else {
            2.0 / (b - a)
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let (a, c, b) = (self.lower, self.mode, self.upper);
        if x <= a {
            0.0
        } else if x >= b {
            1.0
        } else if x <= c {
            (x - a) * (x - a) / ((b - a) * (c - a))
        } else {
            1.0 - (b - x) * (b - x) / ((b - a) * (b - c))
        }
    }

    pub fn mean(&self) -> f64 {
        (self.lower + self.mode + self.upper) / 3.0
    }

    /// Exact mass of the density over each bin overlapping `[lo, hi]`,
    /// restricted to that interval. Returns the first bin index and the
    /// unnormalized masses.
    pub(crate) fn bin_masses(&self, lo: f64, hi: f64, grid: &TimeGrid) -> (usize, Vec<f64>) {
        let lo = lo.max(self.lower);
        let hi = hi.min(self.upper);
        let bins = grid.overlapping_bins(lo, hi);
        let first = *bins.start();
        let masses = bins
            .map(|k| {
                let from = grid.bin_start(k).max(lo);
                let to = grid.bin_end(k).min(hi);
                if to > from {
                    (self.cdf(to) - self.cdf(from)).max(0.0)
                } else {
                    0.0
                }
            })
            .collect();
        (first, masses)
    }
}

/// Probability mass vector over a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    grid: TimeGrid,
    mass: Vec<f64>,
    sub_probability: bool,
}

impl Pmf {
    /// Builds a normalized pmf; entries must be non-negative and sum to 1 within 1e-9.
    pub fn from_mass(grid: TimeGrid, mass: Vec<f64>) -> Result<Self> {
        Self::check_entries(&grid, &mass)?;
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!("pmf sums to {total}, expected 1")));
        }
        Ok(Self { grid, mass, sub_probability: false })
    }

    /// Builds a pmf tagged as a sub-probability slice (total mass ≤ 1).
    pub fn sub_probability(grid: TimeGrid, mass: Vec<f64>) -> Result<Self> {
        Self::check_entries(&grid, &mass)?;
        let total: f64 = mass.iter().sum();
        if total > 1.0 + 1e-9 {
            return Err(Error::Invalid(format!("sub-probability slice sums to {total} > 1")));
        }
        Ok(Self { grid, mass, sub_probability: true })
    }

    fn check_entries(grid: &TimeGrid, mass: &[f64]) -> Result<()> {
        if mass.len() != grid.bins {
            return Err(Error::Invalid(format!(
                "pmf has {} entries for a grid of {} bins",
                mass.len(),
                grid.bins
            )));
        }
        if let Some(bad) = mass.iter().find(|m| !(**m >= 0.0) || !m.is_finite()) {
            return Err(Error::Invalid(format!("pmf entry {bad} is not a non-negative number")));
        }
        Ok(())
    }

    /// Places `masses` starting at bin `first` and divides by their total.
    pub(crate) fn from_sparse(grid: TimeGrid, first: usize, masses: &[f64]) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Degenerate("no mass to normalize".into()));
        }
        let mut mass = vec![0.0; grid.bins];
        for (slot, m) in mass[first..first + masses.len()].iter_mut().zip(masses) {
            *slot = m / total;
        }
        Ok(Self { grid, mass, sub_probability: false })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn is_sub_probability(&self) -> bool {
        self.sub_probability
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// First and last bins carrying non-zero mass.
    pub fn support(&self) -> Option<(usize, usize)> {
        let first = self.mass.iter().position(|m| *m > 0.0)?;
        let last = self.mass.iter().rposition(|m| *m > 0.0)?;
        Some((first, last))
    }

    /// `F(t)`: mass of the bins entirely before `t` plus the linear share of
    /// the bin containing `t`.
    pub fn cdf(&self, t: f64) -> f64 {
        if t.is_nan() {
            return f64::NAN;
        }
        let g = &self.grid;
        if t <= g.origin {
            return 0.0;
        }
        if t >= g.end() {
            return self.total();
        }
        let pos = (t - g.origin) / g.step;
        let k = (pos.floor() as usize).min(g.bins - 1);
        let frac = (pos - k as f64).clamp(0.0, 1.0);
        let before: f64 = self.mass[..k].iter().sum();
        before + frac * self.mass[k]
    }

    /// `F` at every bin edge: entry `k` is `F(origin + k·step)`, length `bins + 1`.
    pub fn cdf_edges(&self) -> Vec<f64> {
        let mut edges = Vec::with_capacity(self.mass.len() + 1);
        let mut acc = 0.0;
        edges.push(0.0);
        for m in &self.mass {
            acc += m;
            edges.push(acc);
        }
        edges
    }

    /// `Σ_k φ(t_k)·mass[k]` with `t_k` the bin midpoint.
    pub fn expectation_of<F: Fn(f64) -> f64>(&self, phi: F) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .filter(|(_, m)| **m > 0.0)
            .map(|(k, m)| phi(self.grid.midpoint(k)) * m)
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.expectation_of(|t| t)
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.expectation_of(|t| (t - mu) * (t - mu))
    }

    /// Third standardized moment.
    pub fn skewness(&self) -> f64 {
        let mu = self.mean();
        let var = self.variance();
        if var <= 0.0 {
            return 0.0;
        }
        self.expectation_of(|t| (t - mu).powi(3)) / var.powf(1.5)
    }
}

/// Exact bin integrals of a triangular density, normalized to 1.
pub fn discretize_triangular(spec: TriangularSpec, grid: &TimeGrid) -> Result<Pmf> {
    discretize_triangular_within(spec, spec.lower, spec.upper, grid)
}

/// Like [`discretize_triangular`] but with the density truncated to
/// `[lo, hi]` before normalization.
pub fn discretize_triangular_within(
    spec: TriangularSpec,
    lo: f64,
    hi: f64,
    grid: &TimeGrid,
) -> Result<Pmf> {
    let lo = lo.max(spec.lower);
    let hi = hi.min(spec.upper);
    if !(hi > lo) {
        return Err(Error::Degenerate(format!(
            "truncation [{lo}, {hi}] leaves no support for {spec:?}"
        )));
    }
    if !grid.covers(lo, hi) {
        return Err(Error::Range(format!(
            "support [{lo}, {hi}] outside grid [{}, {}]",
            grid.origin,
            grid.end()
        )));
    }
    let (first, masses) = spec.bin_masses(lo, hi, grid);
    Pmf::from_sparse(*grid, first, &masses)
}

/// All mass in the bin containing `t`.
pub fn point_mass(t: f64, grid: &TimeGrid) -> Result<Pmf> {
    let k = grid.bin_of(t).ok_or_else(|| {
        Error::Range(format!("{t} outside grid [{}, {})", grid.origin, grid.end()))
    })?;
    let mut mass = vec![0.0; grid.bins];
    mass[k] = 1.0;
    Ok(Pmf { grid: *grid, mass, sub_probability: false })
}
