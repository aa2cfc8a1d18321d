use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{chunked, Diagnostics, SampleBatch, Scheme};
use crate::error::{ensure, Error, Result};
use crate::geometry::{check_point, ModelId, SpacetimePoint};
use crate::kolmogorov::{iterated_law, langevin_law, GaussianLaw};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// How the Asian pair is advanced between grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsianScheme {
    /// Plain Euler on `dX = X dt + √2 X dW`, reflecting non-positive prices.
    Euler,
    /// `X` exact on the grid through its logarithm.
    LogExact,
}

/// Normalisation of the Yor pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YorNormalization {
    /// `X = x₀e^{√2W}`, `Y = y₀ + ∫X`: the process of the operator.
    Operator,
    /// `X = x₀e^{W}`, `Y = y₀ + ∫X`.
    UnitDiffusion,
    /// `X = x₀e^{√2W}`, `Y = y₀ + ½∫X`: the law with the closed-form Yor density.
    DensityFormula,
}

impl YorNormalization {
    fn sigma(self) -> f64 {
        match self {
            YorNormalization::UnitDiffusion => 1.0,
            _ => SQRT2,
        }
    }

    fn average_scale(self) -> f64 {
        match self {
            YorNormalization::DensityFormula => 0.5,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    /// Multiplies every noise term; `0` reproduces the drift flow.
    pub diffusion_scale: f64,
    /// Heisenberg: add a Gaussian surrogate of the Lévy area with the exact
    /// conditional variance.
    pub levy_area: bool,
    pub asian_scheme: AsianScheme,
    pub yor: YorNormalization,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions {
            diffusion_scale: 1.0,
            levy_area: true,
            asian_scheme: AsianScheme::Euler,
            yor: YorNormalization::Operator,
        }
    }
}

fn factor(cov: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(ch) = cov.clone().cholesky() {
        return ch.l();
    }
    let eig = cov.clone().symmetric_eigen();
    let mut v = eig.eigenvectors;
    for (j, l) in eig.eigenvalues.iter().enumerate() {
        let s = l.max(0.0).sqrt();
        v.column_mut(j).scale_mut(s);
    }
    v
}

fn gaussian_rows(law: &GaussianLaw, n: usize, seed: u64) -> Vec<f64> {
    let d = law.dim();
    let l = factor(&law.covariance);
    let mean: DVector<f64> = law.mean.clone();
    chunked(n, d, seed, |rng, rows, out| {
        let mut z = vec![0.0; d];
        for r in 0..rows {
            for v in z.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let row = &mut out[r * d..(r + 1) * d];
            for i in 0..d {
                row[i] = mean[i] + z.iter().enumerate().map(|(j, zj)| l[(i, j)] * zj).sum::<f64>();
            }
        }
        0
    })
    .0
}

/// Independent draws `mean + L·N(0, I)` with `LLᵀ` the covariance.
pub fn sample_gaussian_exact(law: &GaussianLaw, n: usize, seed: u64) -> Result<SampleBatch> {
    ensure(n >= 1, || Error::Argument("sample count must be positive".into()))?;
    let d = law.dim();
    Ok(SampleBatch {
        model: None,
        dims: d,
        data: gaussian_rows(law, n, seed),
        n,
        seed,
        horizon: f64::NAN,
        scheme: Scheme::Exact,
        diagnostics: Diagnostics::default(),
    })
}

/// Exact endpoint law after process time `horizon` for the Gaussian models.
pub fn sample_exact(model: ModelId, z0: &[f64], horizon: f64, n: usize, seed: u64) -> Result<SampleBatch> {
    model.validate()?;
    ensure(z0.len() == model.spatial_dim(), || {
        Error::Argument(format!("{} needs {} coordinates, got {}", model.name(), model.spatial_dim(), z0.len()))
    })?;
    let law = match model {
        ModelId::Heat(k) => {
            ensure(horizon > 0.0, || Error::Precondition(format!("horizon must be positive, got {horizon}")))?;
            GaussianLaw::new(DVector::from_column_slice(z0), DMatrix::identity(k, k) * (2.0 * horizon))?
        }
        ModelId::Kolmogorov => langevin_law(z0[0], z0[1], horizon)?,
        ModelId::IteratedKolmogorov(_) => iterated_law(z0, horizon)?,
        _ => {
            return Err(Error::Unsupported(format!("no exact sampler for {}", model.name())));
        }
    };
    let mut b = sample_gaussian_exact(&law, n, seed)?;
    b.model = Some(model);
    b.horizon = horizon;
    Ok(b)
}

/// Euler–Maruyama endpoints after process time `horizon`, started at `z0`.
pub fn euler_maruyama(
    model: ModelId,
    z0: &[f64],
    horizon: f64,
    dt: f64,
    n: usize,
    seed: u64,
    opts: &EmOptions,
) -> Result<SampleBatch> {
    model.validate()?;
    check_point(model, &SpacetimePoint::new(z0.to_vec(), 0.0))?;
    ensure(n >= 1, || Error::Argument("sample count must be positive".into()))?;
    ensure(horizon > 0.0 && horizon.is_finite(), || {
        Error::Precondition(format!("horizon must be positive, got {horizon}"))
    })?;
    ensure(dt > 0.0 && dt <= horizon / 100.0 * (1.0 + 1e-12), || {
        Error::Precondition(format!("dt must lie in (0, T/100], got {dt} for T = {horizon}"))
    })?;
    let steps = (horizon / dt).round().max(1.0) as usize;
    let h = horizon / steps as f64;
    let sh = h.sqrt();
    let s = opts.diffusion_scale;
    let d = model.spatial_dim();

    let (data, reflections) = chunked(n, d, seed, |rng, rows, out| {
        let mut refl = 0u64;
        let mut x = vec![0.0; d];
        for r in 0..rows {
            x.copy_from_slice(z0);
            match model {
                ModelId::Heat(_) => {
                    for _ in 0..steps {
                        for v in x.iter_mut() {
                            *v += s * SQRT2 * sh * normal(rng);
                        }
                    }
                }
                ModelId::Kolmogorov | ModelId::IteratedKolmogorov(_) => {
                    for _ in 0..steps {
                        for j in (1..d).rev() {
                            x[j] += x[j - 1] * h;
                        }
                        x[0] += s * SQRT2 * sh * normal(rng);
                    }
                }
                ModelId::Heisenberg => {
                    for _ in 0..steps {
                        let b1 = sh * normal(rng);
                        let b2 = sh * normal(rng);
                        let (dx, dy) = (s * SQRT2 * b1, s * SQRT2 * b2);
                        x[2] += 0.5 * (x[0] * dy - x[1] * dx);
                        if opts.levy_area {
                            // twice the Lévy area of (W¹, W²) given the increments
                            let var = (h * h + (b1 * b1 + b2 * b2) * h) / 3.0;
                            x[2] += s * s * var.sqrt() * normal(rng);
                        }
                        x[0] += dx;
                        x[1] += dy;
                    }
                }
                ModelId::QuadraticLifted => {
                    for _ in 0..steps {
                        x[1] += x[0] * x[0] * h;
                        x[2] += x[0] * h;
                        x[0] += s * SQRT2 * sh * normal(rng);
                    }
                }
                ModelId::Asian => {
                    refl += asian_path(&mut x, steps, h, s, opts, rng);
                }
            }
            out[r * d..(r + 1) * d].copy_from_slice(&x);
        }
        refl
    });

    Ok(SampleBatch {
        model: Some(model),
        dims: d,
        data,
        n,
        seed,
        horizon,
        scheme: Scheme::Euler { dt: h },
        diagnostics: Diagnostics { reflections },
    })
}

#[inline]
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn asian_path(x: &mut [f64], steps: usize, h: f64, s: f64, opts: &EmOptions, rng: &mut ChaCha8Rng) -> u64 {
    let sigma = s * opts.yor.sigma();
    let scale = opts.yor.average_scale();
    let sh = h.sqrt();
    let floor = f64::EPSILON * x[0];
    let mut refl = 0;
    let mut integral = 0.0;
    match opts.asian_scheme {
        AsianScheme::Euler => {
            // X = x₀e^{σW} has Itô drift σ²/2
            let drift = 0.5 * sigma * sigma;
            for _ in 0..steps {
                let prev = x[0];
                let mut next = prev + prev * drift * h + sigma * prev * sh * normal(rng);
                if next <= 0.0 {
                    next = (-next).max(floor);
                    refl += 1;
                }
                integral += 0.5 * (prev + next) * h;
                x[0] = next;
            }
        }
        AsianScheme::LogExact => {
            let mut logx = x[0].ln();
            for _ in 0..steps {
                let prev = x[0];
                logx += sigma * sh * normal(rng);
                x[0] = logx.exp();
                integral += 0.5 * (prev + x[0]) * h;
            }
        }
    }
    x[1] += scale * integral;
    refl
}
