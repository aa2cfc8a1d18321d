//! Regimes and envelopes for `∂ₓ² + x²∂_y − ∂_t`.
//!
//! In process terms (`dX = √2 dW`, `dY = X² dt`) the kernel variables map as
//! `ξ = X_0`, `x = X_T`, `t − τ = T` and `η − y = Y_T − Y_0`.

use crate::error::{ensure, Error, Result};
use crate::harnack::EnvelopeConsts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Zero,
    Far,
    Near,
    Unclassified,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Zero => "zero",
            Regime::Far => "far",
            Regime::Near => "near",
            Regime::Unclassified => "unclassified",
        }
    }
}

pub fn regime_classify(x: f64, y: f64, t: f64, xi: f64, eta: f64, tau: f64) -> Regime {
    let rise = eta - y;
    let dt = t - tau;
    if !(rise > 0.0) || !(dt > 0.0) {
        return Regime::Zero;
    }
    let k = rise / (dt * dt);
    if k > (x * x + xi * xi) / dt + 1.0 {
        Regime::Far
    } else if k < 0.5 {
        Regime::Near
    } else {
        Regime::Unclassified
    }
}

/// `amplitude (t−τ)^{−5/2} exp(−rate·E)` with the regime's exponent `E`.
#[allow(clippy::too_many_arguments)]
pub fn regime_envelope(
    regime: Regime,
    consts: EnvelopeConsts,
    x: f64,
    y: f64,
    t: f64,
    xi: f64,
    eta: f64,
    tau: f64,
) -> Result<f64> {
    let exponent = match regime {
        Regime::Zero => return Ok(0.0),
        Regime::Unclassified => {
            return Err(Error::Unsupported("no bound is available between the near and far regimes".into()))
        }
        _ => regime_exponent(regime, x, y, t, xi, eta, tau)?,
    };
    Ok(consts.amplitude * (t - tau).powf(-2.5) * (-consts.rate * exponent).exp())
}

/// Shape variable of a regime: `(x−ξ)²/(t−τ) + (η−y)/(t−τ)²` (far) or
/// `(x⁴+ξ⁴+(t−τ)²)/(η−y)` (near).
pub fn regime_exponent(regime: Regime, x: f64, y: f64, t: f64, xi: f64, eta: f64, tau: f64) -> Result<f64> {
    let dt = t - tau;
    let rise = eta - y;
    ensure(dt > 0.0 && rise > 0.0, || Error::Precondition("regime exponent needs t > tau and eta > y".into()))?;
    match regime {
        Regime::Far => Ok((x - xi) * (x - xi) / dt + rise / (dt * dt)),
        Regime::Near => Ok((x.powi(4) + xi.powi(4) + dt * dt) / rise),
        _ => Err(Error::Unsupported(format!("the {} regime has no exponent", regime.name()))),
    }
}

/// Fraction of simulated `Y` values at or below the start value.
pub fn support_fraction(y: &[f64], y0: f64) -> Result<f64> {
    ensure(!y.is_empty(), || Error::Argument("empty batch".into()))?;
    Ok(y.iter().filter(|&&v| v <= y0).count() as f64 / y.len() as f64)
}
