//! Harnack chains and the lower bounds they certify.

use crate::error::{ensure, Error, Result};
use crate::geometry::{AdmissiblePath, SpacetimePoint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainParams {
    /// Per-link Harnack constant.
    pub m: f64,
    /// Cost granularity of path chains.
    pub h: f64,
    /// Paraboloid height as a fraction of `r²`.
    pub c: f64,
    /// Admissible time fraction: `t0 − t < θ t0`.
    pub theta: f64,
}

impl Default for ChainParams {
    fn default() -> Self {
        ChainParams { m: 8.0, h: 1.0, c: 0.5, theta: 0.5 }
    }
}

impl ChainParams {
    pub fn validate(&self) -> Result<()> {
        ensure(self.m > 1.0 && self.m.is_finite(), || Error::Argument(format!("M must exceed 1, got {}", self.m)))?;
        ensure(self.h > 0.0 && self.h.is_finite(), || Error::Argument(format!("h must be positive, got {}", self.h)))?;
        ensure(self.c > 0.0 && self.c < 1.0, || Error::Argument(format!("c must lie in (0, 1), got {}", self.c)))?;
        ensure(self.theta > 0.0 && self.theta < 1.0, || {
            Error::Argument(format!("theta must lie in (0, 1), got {}", self.theta))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChainSource {
    Segment,
    Path { cost: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarnackChain {
    pub points: Vec<SpacetimePoint>,
    /// Control cost accumulated up to each point.
    pub cumulative_cost: Vec<f64>,
    pub source: ChainSource,
}

impl HarnackChain {
    /// Number of intermediate links.
    pub fn k(&self) -> usize {
        self.points.len().saturating_sub(2)
    }

    pub fn bound_exponent(&self) -> usize {
        self.k() + 1
    }

    /// Columns `step, x1..xN, t, cumulative_cost`.
    pub fn to_csv(&self) -> String {
        let n = self.points.first().map_or(0, |p| p.x.len());
        let mut out = String::from("step");
        for i in 1..=n {
            out.push_str(&format!(",x{i}"));
        }
        out.push_str(",t,cumulative_cost\n");
        for (j, (p, c)) in self.points.iter().zip(&self.cumulative_cost).enumerate() {
            out.push_str(&j.to_string());
            for v in &p.x {
                out.push_str(&format!(",{v:.16e}"));
            }
            out.push_str(&format!(",{:.16e},{c:.16e}\n", p.t));
        }
        out
    }
}

/// Chain for the heat operator from `(x0, t0)` down to `(x, t)` along the
/// straight segment, each point on the boundary of the previous point's
/// paraboloid `{0 < t_j − s ≤ c t_j, |y − x_j|² ≤ t_j − s}`.
pub fn build_parabolic_chain(x0: &[f64], t0: f64, x: &[f64], t: f64, params: &ChainParams) -> Result<HarnackChain> {
    params.validate()?;
    ensure(x0.len() == x.len() && !x.is_empty(), || Error::Argument("endpoint dimensions differ".into()))?;
    let gap = t0 - t;
    ensure(gap > 0.0 && gap < params.theta * t0, || {
        Error::Precondition(format!("need 0 < t0 - t < theta t0, got t0 = {t0}, t = {t}"))
    })?;
    let total_sq: f64 = x0.iter().zip(x).map(|(a, b)| (b - a) * (b - a)).sum();
    let slope_cost = total_sq / gap;

    let mut points = vec![SpacetimePoint::new(x0.to_vec(), t0)];
    let mut costs = vec![0.0];
    let mut cur = x0.to_vec();
    let mut tj = t0;
    loop {
        let dt = tj - t;
        let dx_sq: f64 = cur.iter().zip(x).map(|(a, b)| (b - a) * (b - a)).sum();
        if dx_sq <= dt && dt <= params.c * tj {
            break;
        }
        let side = if dx_sq > 0.0 { dt / dx_sq } else { f64::INFINITY };
        let lambda = side.min(params.c * tj / dt).min(1.0);
        for (v, target) in cur.iter_mut().zip(x) {
            *v += lambda * (target - *v);
        }
        tj -= lambda * dt;
        let done = (t0 - tj) / gap;
        points.push(SpacetimePoint::new(cur.clone(), tj));
        costs.push(done * slope_cost);
        ensure(points.len() < 1_000_000, || Error::Convergence("Harnack chain did not terminate".into()))?;
    }
    points.push(SpacetimePoint::new(x.to_vec(), t));
    costs.push(slope_cost);
    Ok(HarnackChain { points, cumulative_cost: costs, source: ChainSource::Segment })
}

/// Chain along an admissible path: a new link starts at the first sample
/// where the accumulated cost passes each multiple of `h`.
pub fn build_path_chain(path: &AdmissiblePath, params: &ChainParams) -> Result<HarnackChain> {
    params.validate()?;
    ensure(path.samples.len() >= 2, || Error::Argument("path needs at least two samples".into()))?;
    let control = &path.control;
    let grid = control.grid();
    let rate: Vec<f64> = control.values().iter().map(|v| v.iter().map(|c| c * c).sum()).collect();
    // Accumulated cost at each breakpoint.
    let mut at_break = vec![0.0];
    for (w, r) in grid.windows(2).zip(&rate) {
        at_break.push(at_break.last().unwrap() + (w[1] - w[0]) * r);
    }
    let cost_at = |s: f64| {
        let i = grid.partition_point(|&g| g <= s).clamp(1, rate.len());
        at_break[i - 1] + (s - grid[i - 1]) * rate[i - 1]
    };
    let total = *at_break.last().unwrap();

    let last = path.samples.len() - 1;
    let mut points = vec![path.samples[0].clone()];
    let mut costs = vec![0.0];
    let mut next = params.h;
    for i in 1..last {
        let c = cost_at(path.path_time(i));
        if c >= next && c < total {
            points.push(path.samples[i].clone());
            costs.push(c);
            next = (c / params.h).floor() * params.h + params.h;
        }
    }
    points.push(path.samples[last].clone());
    costs.push(total);
    Ok(HarnackChain { points, cumulative_cost: costs, source: ChainSource::Path { cost: total } })
}

/// `u_known / M^{k+1}`: lower bound at the chain origin for a positive
/// solution whose value `u_known` at the chain end is known.
pub fn chain_lower_bound(chain: &HarnackChain, params: &ChainParams, u_known: f64) -> Result<f64> {
    params.validate()?;
    ensure(u_known > 0.0, || Error::Argument(format!("u_known must be positive, got {u_known}")))?;
    Ok(u_known / params.m.powi(chain.bound_exponent() as i32))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

/// Amplitude and exponential rate of a two-sided envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeConsts {
    pub amplitude: f64,
    pub rate: f64,
}

impl EnvelopeConsts {
    pub fn new(amplitude: f64, rate: f64) -> Self {
        EnvelopeConsts { amplitude, rate }
    }
}

/// `amplitude (t−s)^{−N/2} exp(−rate |x−y|²/(t−s))`. `side` is carried for
/// call-site symmetry; the functional form is the same on both sides.
pub fn gaussian_envelope(_side: Side, consts: EnvelopeConsts, x: &[f64], t: f64, y: &[f64], s: f64) -> Result<f64> {
    ensure(x.len() == y.len(), || Error::Argument("point dimensions differ".into()))?;
    let dt = t - s;
    ensure(dt > 0.0, || Error::Precondition(format!("envelope needs t > s, got t - s = {dt}")))?;
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(consts.amplitude * dt.powf(-(x.len() as f64) / 2.0) * (-consts.rate * d2 / dt).exp())
}
