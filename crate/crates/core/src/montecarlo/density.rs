use super::SampleBatch;
use crate::error::{ensure, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Identity,
    /// Bins are uniform in `ln v`; `lo`/`hi` are given in `ln v`.
    Log,
}

impl Transform {
    pub fn forward(self, v: f64) -> f64 {
        match self {
            Transform::Identity => v,
            Transform::Log => {
                if v > 0.0 {
                    v.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn inverse(self, u: f64) -> f64 {
        match self {
            Transform::Identity => u,
            Transform::Log => u.exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    /// Batch column binned along this axis.
    pub column: usize,
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
    pub transform: Transform,
}

impl Axis {
    pub fn new(column: usize, lo: f64, hi: f64, bins: usize) -> Self {
        Axis { column, lo, hi, bins, transform: Transform::Identity }
    }

    pub fn log(column: usize, lo: f64, hi: f64, bins: usize) -> Self {
        Axis { column, lo, hi, bins, transform: Transform::Log }
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    /// Edges of bin `i` in transformed coordinates.
    pub fn edges(&self, i: usize) -> (f64, f64) {
        let w = self.width();
        (self.lo + i as f64 * w, self.lo + (i + 1) as f64 * w)
    }

    /// Physical centre; geometric for log axes.
    pub fn centre(&self, i: usize) -> f64 {
        let (a, b) = self.edges(i);
        self.transform.inverse(0.5 * (a + b))
    }

    pub fn physical_width(&self, i: usize) -> f64 {
        let (a, b) = self.edges(i);
        self.transform.inverse(b) - self.transform.inverse(a)
    }

    fn locate(&self, v: f64) -> Option<usize> {
        let u = self.transform.forward(v);
        if !(u >= self.lo && u < self.hi) {
            return None;
        }
        Some((((u - self.lo) / self.width()) as usize).min(self.bins - 1))
    }
}

/// Rectangular grid; cell indices are row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        ensure(!axes.is_empty(), || Error::Argument("grid needs at least one axis".into()))?;
        for a in &axes {
            ensure(a.bins >= 1 && a.hi > a.lo && a.lo.is_finite() && a.hi.is_finite(), || {
                Error::Argument(format!("bad axis {a:?}"))
            })?;
        }
        Ok(Grid { axes })
    }

    pub fn cells(&self) -> usize {
        self.axes.iter().map(|a| a.bins).product()
    }

    pub fn unravel(&self, mut cell: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for (k, a) in self.axes.iter().enumerate().rev() {
            idx[k] = cell % a.bins;
            cell /= a.bins;
        }
        idx
    }

    pub fn centre(&self, cell: usize) -> Vec<f64> {
        self.unravel(cell).iter().zip(&self.axes).map(|(&i, a)| a.centre(i)).collect()
    }

    pub fn volume(&self, cell: usize) -> f64 {
        self.unravel(cell).iter().zip(&self.axes).map(|(&i, a)| a.physical_width(i)).product()
    }

    fn locate(&self, row: &[f64]) -> Option<usize> {
        let mut cell = 0;
        for a in &self.axes {
            cell = cell * a.bins + a.locate(row[a.column])?;
        }
        Some(cell)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub grid: Grid,
    pub counts: Vec<u64>,
    /// Samples that fell outside the grid.
    pub outside: u64,
    pub n: usize,
    pub seed: u64,
}

/// Two-sided 99% normal quantile.
pub const POISSON_Z99: f64 = 2.575_829_303_548_901;

impl DensityEstimate {
    pub fn density(&self, cell: usize) -> f64 {
        self.counts[cell] as f64 / (self.n as f64 * self.grid.volume(cell))
    }

    /// Poisson score interval for the density of `cell`.
    pub fn interval(&self, cell: usize) -> (f64, f64) {
        let c = self.counts[cell] as f64;
        let z2 = POISSON_Z99 * POISSON_Z99;
        let mid = c + 0.5 * z2;
        let half = POISSON_Z99 * (c + 0.25 * z2).sqrt();
        let norm = self.n as f64 * self.grid.volume(cell);
        ((mid - half).max(0.0) / norm, (mid + half) / norm)
    }

    pub fn radius(&self, cell: usize) -> f64 {
        let (lo, hi) = self.interval(cell);
        0.5 * (hi - lo)
    }

    /// Mass of the grid, `1 − outside/n`.
    pub fn mass(&self) -> f64 {
        (0..self.counts.len()).map(|c| self.density(c) * self.grid.volume(c)).sum()
    }
}

pub fn estimate_density(batch: &SampleBatch, grid: &Grid) -> Result<DensityEstimate> {
    ensure(batch.n > 0, || Error::Argument("empty batch".into()))?;
    for a in &grid.axes {
        ensure(a.column < batch.dims, || {
            Error::Argument(format!("axis column {} outside batch of width {}", a.column, batch.dims))
        })?;
    }
    let mut counts = vec![0u64; grid.cells()];
    let mut outside = 0;
    for r in batch.rows() {
        match grid.locate(r) {
            Some(c) => counts[c] += 1,
            None => outside += 1,
        }
    }
    Ok(DensityEstimate { grid: grid.clone(), counts, outside, n: batch.n, seed: batch.seed })
}
