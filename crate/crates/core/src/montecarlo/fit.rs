use super::DensityEstimate;
use crate::error::{ensure, Error, Result};
use crate::harnack::EnvelopeConsts;

/// Cell-wise comparison of an estimate with a pair of envelopes.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub cells_checked: usize,
    pub lower_violations: usize,
    pub upper_violations: usize,
    pub violation_fraction: f64,
    pub policy: String,
}

pub const COMPARE_POLICY: &str = "poisson-score-99/cell-centre/strict";

/// A cell violates when its whole 99% interval lies below `lower` or above
/// `upper`, both evaluated at the cell centre. Only cells where `include`
/// holds are checked.
pub fn compare_bounds<L, U, I>(est: &DensityEstimate, lower: L, upper: U, include: I) -> BoundReport
where
    L: Fn(&[f64]) -> f64,
    U: Fn(&[f64]) -> f64,
    I: Fn(&[f64]) -> bool,
{
    let mut checked = 0;
    let (mut lv, mut uv) = (0, 0);
    for cell in 0..est.counts.len() {
        let c = est.grid.centre(cell);
        if !include(&c) {
            continue;
        }
        checked += 1;
        let (lo, hi) = est.interval(cell);
        if hi < lower(&c) {
            lv += 1;
        }
        if lo > upper(&c) {
            uv += 1;
        }
    }
    let frac = if checked == 0 { 0.0 } else { (lv + uv) as f64 / checked as f64 };
    BoundReport {
        cells_checked: checked,
        lower_violations: lv,
        upper_violations: uv,
        violation_fraction: frac,
        policy: COMPARE_POLICY.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
}

/// Ordinary least squares of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    ensure(n == y.len() && n >= 2, || Error::Argument(format!("need matching samples, got {} and {}", n, y.len())))?;
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    ensure(sxx > 0.0, || Error::Argument("abscissae are all equal".into()))?;
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(LinearFit { slope, intercept: my - slope * mx, r2, n })
}

/// Envelopes `amplitude·prefactor(z)·exp(−rate·feature(z))` fitted on one
/// estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedEnvelopes {
    pub lower: EnvelopeConsts,
    pub upper: EnvelopeConsts,
    pub fit: LinearFit,
}

impl FittedEnvelopes {
    pub fn eval(consts: EnvelopeConsts, prefactor: f64, feature: f64) -> f64 {
        consts.amplitude * prefactor * (-consts.rate * feature).exp()
    }
}

/// Regresses `ln(density/prefactor)` on `feature` over included cells with at
/// least `min_count` samples, widens the rate by `±margin` and moves each
/// amplitude until the envelope clears every fitted interval.
pub fn fit_envelopes<P, F, I>(
    est: &DensityEstimate,
    prefactor: P,
    feature: F,
    include: I,
    min_count: u64,
    margin: f64,
) -> Result<FittedEnvelopes>
where
    P: Fn(&[f64]) -> f64,
    F: Fn(&[f64]) -> f64,
    I: Fn(&[f64]) -> bool,
{
    ensure((0.0..1.0).contains(&margin), || Error::Argument(format!("margin must lie in [0,1), got {margin}")))?;
    ensure(min_count >= 1, || Error::Argument("min_count must be positive".into()))?;
    let mut cells = Vec::new();
    for cell in 0..est.counts.len() {
        let c = est.grid.centre(cell);
        if est.counts[cell] >= min_count && include(&c) {
            cells.push((cell, prefactor(&c), feature(&c)));
        }
    }
    ensure(cells.len() >= 3, || Error::Accuracy(format!("only {} cells have enough samples to fit", cells.len())))?;
    let xs: Vec<f64> = cells.iter().map(|c| c.2).collect();
    let ys: Vec<f64> = cells.iter().map(|&(cell, p, _)| (est.density(cell) / p).ln()).collect();
    let fit = linear_fit(&xs, &ys)?;
    let rate = -fit.slope;
    let (rl, ru) = (rate * (1.0 + margin), rate * (1.0 - margin));
    let mut al = f64::INFINITY;
    let mut au: f64 = 0.0;
    for &(cell, p, f) in &cells {
        let (lo, hi) = est.interval(cell);
        al = al.min(lo / (p * (-rl * f).exp()));
        au = au.max(hi / (p * (-ru * f).exp()));
    }
    Ok(FittedEnvelopes { lower: EnvelopeConsts::new(al, rl), upper: EnvelopeConsts::new(au, ru), fit })
}
