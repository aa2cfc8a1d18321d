use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::fit::linear_fit;
use super::{euler_maruyama, sample_exact, DensityEstimate, EmOptions, Transform};
use crate::error::{ensure, Error, Result};
use crate::geometry::ModelId;
use crate::quadrature::gauss_legendre;

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Bins after pooling, the pooled bin included.
    pub bins: usize,
    /// Cells whose expected count fell below 5 and were pooled with the
    /// outside region.
    pub pooled_cells: usize,
}

/// Probability of every cell under `density`, by tensor Gauss–Legendre of
/// `order` nodes per axis in the binned coordinates.
pub fn cell_probabilities<D: Fn(&[f64]) -> f64>(est: &DensityEstimate, density: D, order: usize) -> Vec<f64> {
    let (nodes, weights) = gauss_legendre(order);
    let axes = &est.grid.axes;
    let d = axes.len();
    let total = order.pow(d as u32);
    let mut point = vec![0.0; d];
    (0..est.counts.len())
        .map(|cell| {
            let idx = est.grid.unravel(cell);
            let mut sum = 0.0;
            for k in 0..total {
                let mut rem = k;
                let mut w = 1.0;
                for a in (0..d).rev() {
                    let q = rem % order;
                    rem /= order;
                    let (lo, hi) = axes[a].edges(idx[a]);
                    let half = 0.5 * (hi - lo);
                    let u = 0.5 * (lo + hi) + half * nodes[q];
                    let v = axes[a].transform.inverse(u);
                    point[a] = v;
                    w *= half * weights[q] * if axes[a].transform == Transform::Log { v } else { 1.0 };
                }
                sum += w * density(&point);
            }
            sum
        })
        .collect()
}

/// Pearson χ² of the binned counts against `density`. Cells expecting fewer
/// than five samples are pooled with the mass outside the grid.
pub fn chi_square_test<D: Fn(&[f64]) -> f64>(
    est: &DensityEstimate,
    density: D,
    order: usize,
) -> Result<ChiSquareResult> {
    let probs = cell_probabilities(est, density, order);
    let n = est.n as f64;
    let inside: f64 = probs.iter().sum();
    ensure(inside.is_finite() && inside <= 1.0 + 1e-6, || {
        Error::Accuracy(format!("cell probabilities sum to {inside}"))
    })?;
    let mut stat = 0.0;
    let mut bins = 0;
    let mut pooled_cells = 0;
    let mut pool_expected = n * (1.0 - inside).max(0.0);
    let mut pool_observed = est.outside as f64;
    for (c, p) in probs.iter().enumerate() {
        let e = n * p;
        let o = est.counts[c] as f64;
        if e < 5.0 {
            pool_expected += e;
            pool_observed += o;
            pooled_cells += 1;
        } else {
            stat += (o - e) * (o - e) / e;
            bins += 1;
        }
    }
    if pool_expected > 0.0 {
        stat += (pool_observed - pool_expected).powi(2) / pool_expected;
        bins += 1;
    }
    ensure(bins >= 2, || Error::Accuracy("fewer than two χ² bins".into()))?;
    let dof = bins - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Argument(e.to_string()))?;
    Ok(ChiSquareResult { statistic: stat, dof, p_value: dist.sf(stat), bins, pooled_cells })
}

/// Least-squares slope of `ln var` against `ln t`, one per column of `vars`.
pub fn fit_slope(times: &[f64], vars: &[Vec<f64>]) -> Result<Vec<f64>> {
    ensure(times.len() == vars.len() && times.len() >= 2, || Error::Argument("need one variance row per time".into()))?;
    let lt: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let d = vars[0].len();
    (0..d)
        .map(|j| {
            let lv: Vec<f64> = vars
                .iter()
                .map(|v| {
                    ensure(v[j] > 0.0 && v[j].is_finite(), || {
                        Error::Accuracy(format!("degenerate variance {} in column {j}", v[j]))
                    })?;
                    Ok(v[j].ln())
                })
                .collect::<Result<_>>()?;
            Ok(linear_fit(&lt, &lv)?.slope)
        })
        .collect()
}

/// Simulated log-log variance slopes from the origin. Gaussian models use the
/// exact sampler, the others Euler–Maruyama with 200 steps.
pub fn variance_slope(model: ModelId, times: &[f64], n: usize, seed: u64) -> Result<Vec<f64>> {
    ensure(times.len() >= 4, || Error::Precondition(format!("need at least 4 times, got {}", times.len())))?;
    let (lo, hi) = times.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &t| (a.min(t), b.max(t)));
    ensure(lo > 0.0 && hi >= 10.0 * lo * (1.0 - 1e-12), || {
        Error::Precondition(format!("times must span a decade, got [{lo}, {hi}]"))
    })?;
    let mut z0 = vec![0.0; model.spatial_dim()];
    if model == ModelId::Asian {
        z0[0] = 1.0;
    }
    let vars = times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let s = seed.wrapping_add(k as u64);
            let b = match model {
                ModelId::Heat(_) | ModelId::Kolmogorov | ModelId::IteratedKolmogorov(_) => {
                    sample_exact(model, &z0, t, n, s)?
                }
                _ => euler_maruyama(model, &z0, t, t / 200.0, n, s, &EmOptions::default())?,
            };
            let c = b.covariance();
            Ok((0..b.dims).map(|j| c[j][j]).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    fit_slope(times, &vars)
}
