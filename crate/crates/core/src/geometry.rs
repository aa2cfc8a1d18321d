//! Model registry: group laws, dilations, admissible paths and attainable sets.
//!
//! Every model is a first-order drift `Y` plus `m` diffusion fields `X_k` on
//! `R^N x R`. An admissible path solves `γ' = Σ ω_k X_k(γ) + Y(γ)` with the
//! time coordinate decreasing at unit speed.
//!
//! Spatial coordinate orders:
//!
//! | model | coordinates |
//! |---|---|
//! | `Heat(N)` | `x_1..x_N` |
//! | `Heisenberg` | `(x, y, w)` |
//! | `Kolmogorov` | `(x, y)` |
//! | `IteratedKolmogorov(N)` | `x^1..x^N` |
//! | `QuadraticLifted` | `(x, y, w)` with `y' = x²`, `w' = x` |
//! | `Asian` | `(x, y)` with `x > 0` |
//!
//! The quadratic attainable set is conventionally written in the order
//! `(x, w, y, t)`; [`attainable_quadratic`] takes that order.

use crate::error::{ensure, Error, Result};
use crate::ode::rk4_step;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelId {
    Heat(usize),
    Heisenberg,
    Kolmogorov,
    IteratedKolmogorov(usize),
    QuadraticLifted,
    Asian,
}

impl ModelId {
    pub fn spatial_dim(self) -> usize {
        match self {
            ModelId::Heat(n) | ModelId::IteratedKolmogorov(n) => n,
            ModelId::Heisenberg | ModelId::QuadraticLifted => 3,
            ModelId::Kolmogorov | ModelId::Asian => 2,
        }
    }

    /// Number of diffusion fields `m`.
    pub fn controls(self) -> usize {
        match self {
            ModelId::Heat(n) => n,
            ModelId::Heisenberg => 2,
            _ => 1,
        }
    }

    /// Homogeneous dimension of the space variables; `None` without dilations.
    pub fn homogeneous_dim(self) -> Option<usize> {
        match self {
            ModelId::Heat(n) => Some(n),
            ModelId::Heisenberg | ModelId::Kolmogorov => Some(4),
            ModelId::IteratedKolmogorov(n) => Some(n * n),
            ModelId::QuadraticLifted => Some(8),
            ModelId::Asian => None,
        }
    }

    pub fn has_dilation(self) -> bool {
        self.homogeneous_dim().is_some()
    }

    pub fn validate(self) -> Result<()> {
        match self {
            ModelId::Heat(0) => Err(Error::Argument("Heat(N) needs N >= 1".into())),
            ModelId::IteratedKolmogorov(n) if n < 2 => {
                Err(Error::Argument("IteratedKolmogorov(N) needs N >= 2".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn name(self) -> String {
        match self {
            ModelId::Heat(n) => format!("heat{n}"),
            ModelId::Heisenberg => "heisenberg".into(),
            ModelId::Kolmogorov => "kolmogorov".into(),
            ModelId::IteratedKolmogorov(n) => format!("iterated{n}"),
            ModelId::QuadraticLifted => "quadratic".into(),
            ModelId::Asian => "asian".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimePoint {
    pub x: Vec<f64>,
    pub t: f64,
}

impl SpacetimePoint {
    pub fn new(x: impl Into<Vec<f64>>, t: f64) -> Self {
        SpacetimePoint { x: x.into(), t }
    }

    pub fn origin(model: ModelId) -> Self {
        let mut x = vec![0.0; model.spatial_dim()];
        if model == ModelId::Asian {
            x[0] = 1.0;
        }
        SpacetimePoint { x, t: 0.0 }
    }

    /// Coordinates followed by time.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.x.clone();
        v.push(self.t);
        v
    }

    /// Largest absolute coordinate difference, time included.
    pub fn max_abs_diff(&self, other: &SpacetimePoint) -> f64 {
        self.x.iter().zip(&other.x).map(|(a, b)| (a - b).abs()).fold((self.t - other.t).abs(), f64::max)
    }
}

/// Checks dimension, finiteness and the model's state-space constraint.
pub fn check_point(model: ModelId, z: &SpacetimePoint) -> Result<()> {
    model.validate()?;
    ensure(z.x.len() == model.spatial_dim(), || {
        Error::Argument(format!(
            "{} expects {} spatial coordinates, got {}",
            model.name(),
            model.spatial_dim(),
            z.x.len()
        ))
    })?;
    ensure(z.x.iter().all(|v| v.is_finite()) && z.t.is_finite(), || Error::Argument("non-finite coordinate".into()))?;
    if model == ModelId::Asian {
        ensure(z.x[0] > 0.0, || Error::Domain(format!("Asian price coordinate must be positive, got {}", z.x[0])))?;
    }
    Ok(())
}

/// Piecewise-constant control: `values[i]` acts on `[grid[i], grid[i+1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPath {
    grid: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl ControlPath {
    pub fn new(grid: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        ensure(grid.len() >= 2, || Error::Argument("control grid needs two breakpoints".into()))?;
        ensure(grid[0] == 0.0, || Error::Argument("control grid must start at 0".into()))?;
        ensure(grid.windows(2).all(|w| w[1] > w[0]) && grid.iter().all(|g| g.is_finite()), || {
            Error::Argument("control grid must be finite and strictly increasing".into())
        })?;
        ensure(values.len() + 1 == grid.len(), || {
            Error::Argument(format!(
                "{} breakpoints need {} control values, got {}",
                grid.len(),
                grid.len() - 1,
                values.len()
            ))
        })?;
        let m = values[0].len();
        ensure(m >= 1 && values.iter().all(|v| v.len() == m), || {
            Error::Argument("control vectors must share one nonzero dimension".into())
        })?;
        ensure(values.iter().flatten().all(|v| v.is_finite()), || {
            Error::Argument("control values must be finite".into())
        })?;
        Ok(ControlPath { grid, values })
    }

    pub fn constant(value: Vec<f64>, horizon: f64) -> Result<Self> {
        ControlPath::new(vec![0.0, horizon], vec![value])
    }

    /// `values.len()` equal intervals on `[0, horizon]`.
    pub fn uniform(values: Vec<Vec<f64>>, horizon: f64) -> Result<Self> {
        let n = values.len();
        ensure(n >= 1 && horizon > 0.0, || {
            Error::Argument("uniform control needs values and a positive horizon".into())
        })?;
        let mut grid: Vec<f64> = (0..=n).map(|i| horizon * i as f64 / n as f64).collect();
        grid[n] = horizon;
        ControlPath::new(grid, values)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn horizon(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn min_interval(&self) -> f64 {
        self.grid.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// Control active at path time `s` (right-continuous, last value at `T`).
    pub fn at(&self, s: f64) -> &[f64] {
        let i = self.grid.partition_point(|&g| g <= s).clamp(1, self.values.len());
        &self.values[i - 1]
    }

    /// Control `s ↦ ρ ω(ρ² s)` on `[0, T/ρ²]`.
    pub fn rescaled(&self, rho: f64) -> ControlPath {
        let r2 = rho * rho;
        ControlPath {
            grid: self.grid.iter().map(|g| g / r2).collect(),
            values: self.values.iter().map(|v| v.iter().map(|c| rho * c).collect()).collect(),
        }
    }
}

/// `Φ(ω) = ∫ |ω|²`, exact for piecewise-constant controls.
pub fn path_cost(omega: &ControlPath) -> f64 {
    omega.grid.windows(2).zip(&omega.values).map(|(w, v)| (w[1] - w[0]) * v.iter().map(|c| c * c).sum::<f64>()).sum()
}

/// `ℓ(ω) = ∫ |ω|`, exact for piecewise-constant controls.
pub fn path_length(omega: &ControlPath) -> f64 {
    omega
        .grid
        .windows(2)
        .zip(&omega.values)
        .map(|(w, v)| (w[1] - w[0]) * v.iter().map(|c| c * c).sum::<f64>().sqrt())
        .sum()
}

#[derive(Debug, Clone)]
pub struct AdmissiblePath {
    pub samples: Vec<SpacetimePoint>,
    pub control: ControlPath,
    pub step: f64,
}

impl AdmissiblePath {
    pub fn start(&self) -> &SpacetimePoint {
        &self.samples[0]
    }

    pub fn end(&self) -> &SpacetimePoint {
        self.samples.last().unwrap()
    }

    /// Path time of sample `i`.
    pub fn path_time(&self, i: usize) -> f64 {
        self.samples[0].t - self.samples[i].t
    }
}

/// `Σ ω_k X_k(x) + Y(x)` restricted to the spatial coordinates.
pub fn vector_field(model: ModelId, x: &[f64], omega: &[f64], out: &mut [f64]) {
    match model {
        ModelId::Heat(_) => out.copy_from_slice(omega),
        ModelId::Heisenberg => {
            out[0] = omega[0];
            out[1] = omega[1];
            out[2] = 0.5 * (x[0] * omega[1] - x[1] * omega[0]);
        }
        ModelId::Kolmogorov | ModelId::IteratedKolmogorov(_) => {
            out[0] = omega[0];
            for j in 1..x.len() {
                out[j] = x[j - 1];
            }
        }
        ModelId::QuadraticLifted => {
            out[0] = omega[0];
            out[1] = x[0] * x[0];
            out[2] = x[0];
        }
        ModelId::Asian => {
            out[0] = omega[0] * x[0];
            out[1] = x[0];
        }
    }
}

/// Integrates the admissible-path ODE from `z0` under `omega` with RK4.
///
/// Sample `i` sits at time `t0 - i·step`; when the horizon is not a
/// multiple of `step` a final shorter step lands exactly on `t0 - T`.
pub fn integrate_path(model: ModelId, z0: &SpacetimePoint, omega: &ControlPath, step: f64) -> Result<AdmissiblePath> {
    check_point(model, z0)?;
    ensure(omega.dim() == model.controls(), || {
        Error::Argument(format!("{} takes {} controls, got {}", model.name(), model.controls(), omega.dim()))
    })?;
    ensure(step > 0.0 && step.is_finite(), || Error::Argument("step must be positive".into()))?;
    ensure(step <= omega.min_interval() * (1.0 + 1e-12), || {
        Error::Precondition(format!("step {step} exceeds the smallest control interval {}", omega.min_interval()))
    })?;

    let horizon = omega.horizon();
    let full = (horizon / step + 1e-9).floor() as usize;
    let ragged = horizon - full as f64 * step > 1e-9 * step;
    let mut times: Vec<f64> = (0..=full).map(|i| i as f64 * step).collect();
    if ragged {
        times.push(horizon);
    }

    let n = model.spatial_dim();
    let mut state = z0.x.clone();
    let mut samples = Vec::with_capacity(times.len());
    samples.push(z0.clone());
    let grid = omega.grid();
    for w in times.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut s = a;
        // Split at control breakpoints lying strictly inside the step.
        let mut k = grid.partition_point(|&g| g <= a + 1e-12 * step);
        loop {
            let stop = if k < grid.len() && grid[k] < b - 1e-12 * step { grid[k] } else { b };
            let u = omega.at(0.5 * (s + stop)).to_vec();
            let mut f = |x: &[f64], out: &mut [f64]| vector_field(model, x, &u, out);
            rk4_step(&mut f, &mut state, stop - s);
            s = stop;
            if stop >= b {
                break;
            }
            k += 1;
        }
        if model == ModelId::Asian && !(state[0] > 0.0) {
            return Err(Error::DomainExit { time: b });
        }
        if state.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument(format!("path blew up at path time {b}")));
        }
        debug_assert_eq!(state.len(), n);
        let t = if b == horizon && ragged { z0.t - horizon } else { z0.t - b };
        samples.push(SpacetimePoint::new(state.clone(), t));
    }
    Ok(AdmissiblePath { samples, control: omega.clone(), step })
}

/// `E(t) x` with `E(t) = exp(-tB)`, `B` the lower shift; `E_ij = (-t)^(i-j)/(i-j)!`.
fn shift_exp(t: f64, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut coef = 1.0;
        for d in 0..=i {
            if d > 0 {
                coef *= -t / d as f64;
            }
            out[i] += coef * x[i - d];
        }
    }
    out
}

/// Left translation `z0 ∘ z`.
pub fn group_compose(model: ModelId, z0: &SpacetimePoint, z: &SpacetimePoint) -> Result<SpacetimePoint> {
    check_point(model, z0)?;
    check_point(model, z)?;
    let (a, b) = (&z0.x, &z.x);
    let t = z0.t + z.t;
    let x = match model {
        ModelId::Heat(_) => a.iter().zip(b).map(|(p, q)| p + q).collect(),
        ModelId::Heisenberg => vec![a[0] + b[0], a[1] + b[1], a[2] + b[2] + 0.5 * (a[0] * b[1] - a[1] * b[0])],
        ModelId::Kolmogorov | ModelId::IteratedKolmogorov(_) => {
            let e = shift_exp(z.t, a);
            b.iter().zip(&e).map(|(p, q)| p + q).collect()
        }
        ModelId::QuadraticLifted => {
            vec![b[0] + a[0], b[1] + a[1] + 2.0 * a[0] * b[2] - z.t * a[0] * a[0], b[2] + a[2] - z.t * a[0]]
        }
        ModelId::Asian => vec![a[0] * b[0], a[1] + a[0] * b[1]],
    };
    Ok(SpacetimePoint { x, t })
}

/// Group inverse: `group_compose(inverse(z), z)` is the identity.
pub fn group_inverse(model: ModelId, z: &SpacetimePoint) -> Result<SpacetimePoint> {
    check_point(model, z)?;
    let a = &z.x;
    let x = match model {
        ModelId::Heat(_) | ModelId::Heisenberg => a.iter().map(|v| -v).collect(),
        ModelId::Kolmogorov | ModelId::IteratedKolmogorov(_) => shift_exp(-z.t, a).into_iter().map(|v| -v).collect(),
        ModelId::QuadraticLifted => vec![-a[0], -a[1] + 2.0 * a[0] * a[2] + z.t * a[0] * a[0], -a[2] - z.t * a[0]],
        ModelId::Asian => vec![1.0 / a[0], -a[1] / a[0]],
    };
    Ok(SpacetimePoint { x, t: -z.t })
}

/// Spatial dilation exponents; time always scales with `ρ²`.
pub fn dilation_weights(model: ModelId) -> Result<Vec<i32>> {
    model.validate()?;
    Ok(match model {
        ModelId::Heat(n) => vec![1; n],
        ModelId::Heisenberg => vec![1, 1, 2],
        ModelId::Kolmogorov => vec![1, 3],
        ModelId::IteratedKolmogorov(n) => (1..=n as i32).map(|j| 2 * j - 1).collect(),
        ModelId::QuadraticLifted => vec![1, 4, 3],
        ModelId::Asian => return Err(Error::Unsupported("the Asian model has no dilation group".into())),
    })
}

/// `δ_ρ(z)`.
pub fn dilate(model: ModelId, rho: f64, z: &SpacetimePoint) -> Result<SpacetimePoint> {
    let w = dilation_weights(model)?;
    check_point(model, z)?;
    ensure(rho > 0.0 && rho.is_finite(), || Error::Argument(format!("dilation factor must be positive, got {rho}")))?;
    Ok(SpacetimePoint { x: z.x.iter().zip(&w).map(|(v, &k)| v * rho.powi(k)).collect(), t: z.t * rho * rho })
}

/// Attainable set of the origin in `]-1,1[^3` for the Kolmogorov model.
pub fn attainable_kolmogorov(z: &SpacetimePoint) -> bool {
    let (x, y, t) = (z.x[0], z.x[1], z.t);
    [x, y, t].iter().all(|v| v.abs() < 1.0) && t < -y.abs()
}

/// Closure of the attainable set of the origin in `]-1,1[^4` for the lifted
/// quadratic model. Argument order is `(x, w, y, t)`.
pub fn attainable_quadratic(z: [f64; 4]) -> bool {
    let [_, w, y, t] = z;
    z.iter().all(|v| v.abs() <= 1.0) && (0.0..=-t).contains(&y) && w * w <= -t * y
}

/// Reorders a stored `QuadraticLifted` point to `(x, w, y, t)`.
pub fn quadratic_printed_order(z: &SpacetimePoint) -> [f64; 4] {
    [z.x[0], z.x[2], z.x[1], z.t]
}
