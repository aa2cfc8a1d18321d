//! Closed-form kernel and value function of `∂ₓ² + x∂_y − ∂_t`, the Gaussian
//! law of the Langevin pair and its iterated generalisation.
//!
//! `gamma0` and `psi0` are written in the time of the process
//! `dX = √2 dW, dY = X dt`: the first triple is the later point. Admissible
//! paths run backwards in that time, so the group of [`crate::geometry`] acts
//! on them after the reflection [`process_time`].

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure, Error, Result};
use crate::geometry::{integrate_path, ControlPath, ModelId, SpacetimePoint};

/// Default number of control intervals for [`optimal_control_kolmogorov`].
pub const OPTIMAL_CONTROL_INTERVALS: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLaw {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl GaussianLaw {
    /// Validates symmetry and positive semi-definiteness; eigenvalues down to
    /// `-1e-12` are tolerated as rounding.
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        ensure(n >= 1 && covariance.nrows() == n && covariance.ncols() == n, || {
            Error::Argument("mean and covariance dimensions disagree".into())
        })?;
        ensure(mean.iter().chain(covariance.iter()).all(|v| v.is_finite()), || {
            Error::Argument("non-finite Gaussian parameters".into())
        })?;
        let scale = covariance.amax().max(1.0);
        ensure((&covariance - covariance.transpose()).amax() <= 1e-12 * scale, || {
            Error::Argument("covariance is not symmetric".into())
        })?;
        let min_eig = covariance.clone().symmetric_eigenvalues().min();
        ensure(min_eig >= -1e-12 * scale, || {
            Error::Argument(format!("covariance is not positive semi-definite (eigenvalue {min_eig:e})"))
        })?;
        Ok(GaussianLaw { mean, covariance })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Density at `x`; requires a nonsingular covariance.
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        let chol = self
            .covariance
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Precondition("singular covariance has no density".into()))?;
        let d = DVector::from_column_slice(x) - &self.mean;
        let sol = chol.solve(&d);
        let det = chol.determinant();
        let n = self.dim() as f64;
        Ok((-0.5 * d.dot(&sol)).exp() / ((2.0 * std::f64::consts::PI).powf(n) * det).sqrt())
    }
}

/// Diffusion coefficient of the first coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Diffusion {
    /// `dX = √2 dW`, the generator `∂ₓ²`.
    Operator,
    /// `dX = dW`, the generator `½∂ₓ²`.
    Unit,
}

impl Diffusion {
    fn variance_rate(self) -> f64 {
        match self {
            Diffusion::Operator => 2.0,
            Diffusion::Unit => 1.0,
        }
    }
}

/// Fundamental solution `Γ₀(x,y,t; ξ,η,τ)`; zero for `t ≤ τ`.
pub fn gamma0(x: f64, y: f64, t: f64, xi: f64, eta: f64, tau: f64) -> f64 {
    let s = t - tau;
    if !(s > 0.0) {
        return 0.0;
    }
    let a = x - xi;
    let b = y - eta - 0.5 * s * (x + xi);
    3f64.sqrt() / (2.0 * std::f64::consts::PI * s * s) * (-a * a / (4.0 * s) - 3.0 * b * b / (s * s * s)).exp()
}

/// Value function `Ψ₀(x,y,t; ξ,η,τ)`, requires `t > τ`.
pub fn psi0(x: f64, y: f64, t: f64, xi: f64, eta: f64, tau: f64) -> Result<f64> {
    let s = t - tau;
    ensure(s > 0.0, || Error::Precondition(format!("psi0 needs t > tau, got t - tau = {s}")))?;
    let a = x - xi;
    let b = y - eta - 0.5 * s * (x + xi);
    Ok(a * a / s + 12.0 * b * b / (s * s * s))
}

/// `(x, y, t) ↦ (x, y, −t)`, between path time and process time.
pub fn process_time(z: &SpacetimePoint) -> SpacetimePoint {
    SpacetimePoint { x: z.x.clone(), t: -z.t }
}

/// Minimal cost of an admissible path from `start` down to `end`
/// (`start.t > end.t`).
pub fn path_value(start: &SpacetimePoint, end: &SpacetimePoint) -> Result<f64> {
    psi0(end.x[0], end.x[1], -end.t, start.x[0], start.x[1], -start.t)
}

/// Law of `(X_s, Y_s)` for the Langevin pair started at `(x0, y0)`.
pub fn langevin_law(x0: f64, y0: f64, s: f64) -> Result<GaussianLaw> {
    langevin_law_with(x0, y0, s, Diffusion::Operator)
}

pub fn langevin_law_with(x0: f64, y0: f64, s: f64, diffusion: Diffusion) -> Result<GaussianLaw> {
    ensure(s > 0.0 && s.is_finite(), || Error::Precondition(format!("horizon must be positive, got {s}")))?;
    let k = diffusion.variance_rate();
    let cov = DMatrix::from_row_slice(2, 2, &[k * s, k * s * s / 2.0, k * s * s / 2.0, k * s * s * s / 3.0]);
    GaussianLaw::new(DVector::from_vec(vec![x0, y0 + s * x0]), cov)
}

/// Covariance of `(X¹,…,X^N)` started at zero with `dX¹ = √2 dW`,
/// `dX^{j+1} = X^j dt`.
pub fn iterated_covariance(n: usize, s: f64) -> Result<GaussianLaw> {
    iterated_law(&vec![0.0; n], s)
}

/// Law of the iterated chain started at `x0`.
pub fn iterated_law(x0: &[f64], s: f64) -> Result<GaussianLaw> {
    let n = x0.len();
    ensure(n >= 2, || Error::Precondition(format!("iterated chain needs N >= 2, got {n}")))?;
    ensure(s > 0.0 && s.is_finite(), || Error::Precondition(format!("horizon must be positive, got {s}")))?;
    let fact: Vec<f64> = (0..n)
        .scan(1.0, |f, k| {
            let v = *f;
            *f *= (k + 1) as f64;
            Some(v)
        })
        .collect();
    let cov = DMatrix::from_fn(n, n, |i, j| {
        let p = (i + j + 1) as i32;
        2.0 * s.powi(p) / (fact[i] * fact[j] * p as f64)
    });
    // Mean follows the drift flow x' = Bx: mean_i = Σ_d s^d/d! x0_{i-d}.
    let mean = DVector::from_fn(n, |i, _| (0..=i).map(|d| s.powi(d as i32) / fact[d] * x0[i - d]).sum());
    GaussianLaw::new(mean, cov)
}

/// Minimum-energy control steering `z0` down to `z1` with
/// [`OPTIMAL_CONTROL_INTERVALS`] constant pieces.
pub fn optimal_control_kolmogorov(z0: &SpacetimePoint, z1: &SpacetimePoint) -> Result<ControlPath> {
    optimal_control_kolmogorov_with(z0, z1, OPTIMAL_CONTROL_INTERVALS)
}

/// Control values are affine in the interval midpoints `m_i`; they solve the
/// discrete minimum-norm problem exactly, so the endpoint is hit exactly and
/// the cost exceeds `Ψ₀` by a relative `O((T/intervals)²)`.
pub fn optimal_control_kolmogorov_with(
    z0: &SpacetimePoint,
    z1: &SpacetimePoint,
    intervals: usize,
) -> Result<ControlPath> {
    ensure(z0.x.len() == 2 && z1.x.len() == 2, || Error::Argument("Kolmogorov points are (x, y, t)".into()))?;
    ensure(intervals >= 1, || Error::Argument("need at least one control interval".into()))?;
    let horizon = z0.t - z1.t;
    ensure(horizon > 0.0, || {
        Error::Precondition(format!("start time must exceed end time, got difference {horizon}"))
    })?;
    let dx = z1.x[0] - z0.x[0];
    let dy = z1.x[1] - z0.x[1] - horizon * z0.x[0];
    let h = horizon / intervals as f64;
    // Constraint rows: Σ h ω_i = dx and Σ h (T − m_i) ω_i = dy.
    let lever: Vec<f64> = (0..intervals).map(|i| horizon - (i as f64 + 0.5) * h).collect();
    let g11 = horizon;
    let g12: f64 = lever.iter().map(|l| h * l).sum();
    let g22: f64 = lever.iter().map(|l| h * l * l).sum();
    let det = g11 * g22 - g12 * g12;
    let a = (g22 * dx - g12 * dy) / det;
    let b = (g11 * dy - g12 * dx) / det;
    let values = lever.iter().map(|l| vec![a + b * l]).collect();
    ControlPath::uniform(values, horizon)
}

/// Endpoint of the admissible path driven by `omega` from `z0`, with an RK4
/// step equal to the control resolution (exact for these polynomial flows).
pub fn steer(z0: &SpacetimePoint, omega: &ControlPath) -> Result<SpacetimePoint> {
    let path = integrate_path(ModelId::Kolmogorov, z0, omega, omega.min_interval())?;
    Ok(path.end().clone())
}
