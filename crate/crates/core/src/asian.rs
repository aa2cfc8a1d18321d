//! Value function, Yor density and bound envelopes for the Asian operator
//! `x²∂ₓₓ + x∂ₓ + x∂_y − ∂_t` on `R⁺ x R x R`.
//!
//! # Branches of the value function
//!
//! With `T = t₁ − t₀`, `D = y₀ − y₁`, `q = D/(T√(x₁x₀))`, `r = g⁻¹(q)` and
//! `E = 4r/T²` the value function is
//!
//! ```text
//! Ψ = E·T + 4(x₁+x₀)/D ∓ 4√(E + 4x₁x₀/D²)
//! ```
//!
//! taking `−` when `r ≥ −π²/4` ([`Branch::First`]) and `+` when
//! `−π² < r < −π²/4` ([`Branch::Second`]). The thresholds are usually quoted
//! as `E ≥ −π²/T` and `−4π²/T < E < −π²/T`; those only match the range of
//! `g⁻¹` with `T²` in the denominators, which is the reading used here.
//! The radicand equals `(2h(r)/T)²` with `h(r) = √r·coth√r` (continued
//! through `√−r·cot√−r` for negative `r`), so both branches collapse to
//! `Ψ = 4r/T + 4(x₁+x₀)/D − 8h(r)/T`, which is what gets evaluated.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{ensure, Error, Result};
use crate::geometry::SpacetimePoint;
use crate::harnack::{EnvelopeConsts, Side};
use crate::kolmogorov::path_value;
use crate::quadrature::{adaptive, gauss_kronrod15};

const SERIES_CUTOFF: f64 = 1e-4;

/// `g(r) = sinh√r/√r`, continued by `sin√−r/√−r` down to `r > −π²`.
pub fn g(r: f64) -> Result<f64> {
    ensure(r > -PI * PI, || Error::Domain(format!("g needs r > -pi^2, got {r}")))?;
    ensure(r.is_finite(), || Error::Argument("g of a non-finite argument".into()))?;
    Ok(g_unchecked(r))
}

fn g_unchecked(r: f64) -> f64 {
    if r.abs() < SERIES_CUTOFF {
        1.0 + r * (1.0 / 6.0 + r * (1.0 / 120.0 + r / 5040.0))
    } else if r > 0.0 {
        let s = r.sqrt();
        s.sinh() / s
    } else {
        let s = (-r).sqrt();
        s.sin() / s
    }
}

fn g_prime(r: f64) -> f64 {
    if r.abs() < SERIES_CUTOFF {
        1.0 / 6.0 + r * (1.0 / 60.0 + r / 1680.0)
    } else if r > 0.0 {
        let s = r.sqrt();
        (s * s.cosh() - s.sinh()) / (2.0 * s * s * s)
    } else {
        let s = (-r).sqrt();
        (s.sin() - s * s.cos()) / (2.0 * s * s * s)
    }
}

/// `√r coth√r`, continued analytically through `r = 0` and to negative `r`.
fn h(r: f64) -> f64 {
    if r.abs() < SERIES_CUTOFF {
        1.0 + r * (1.0 / 3.0 + r * (-1.0 / 45.0 + r * 2.0 / 945.0))
    } else if r > 0.0 {
        let s = r.sqrt();
        s / s.tanh()
    } else {
        let s = (-r).sqrt();
        s / s.tan()
    }
}

/// Unique `r ∈ (−π², ∞)` with `g(r) = v`.
pub fn g_inverse(v: f64) -> Result<f64> {
    ensure(v > 0.0 && v.is_finite(), || Error::Domain(format!("g_inverse needs v > 0, got {v}")))?;
    if v == 1.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = if v > 1.0 {
        let mut hi = 1.0;
        while g_unchecked(hi) < v {
            hi *= 4.0;
            ensure(hi < 1e7, || Error::Domain(format!("g_inverse argument {v} too large")))?;
        }
        (0.0, hi)
    } else {
        (-PI * PI, 0.0)
    };
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if g_unchecked(mid) < v {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-3 * (1.0 + hi.abs()) {
            break;
        }
    }
    let mut r = 0.5 * (lo + hi);
    for _ in 0..100 {
        let f = g_unchecked(r) - v;
        if f == 0.0 {
            break;
        }
        if f < 0.0 {
            lo = lo.max(r);
        } else {
            hi = hi.min(r);
        }
        let mut next = r - f / g_prime(r);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done = (next - r).abs() <= 4.0 * f64::EPSILON * (1.0 + r.abs());
        r = next;
        if done || hi - lo <= 4.0 * f64::EPSILON * (1.0 + r.abs()) {
            break;
        }
    }
    let resid = (g_unchecked(r) - v).abs();
    ensure(resid <= 1e-10 * v.max(1.0), || Error::Convergence(format!("g_inverse({v}) left residual {resid:e}")))?;
    Ok(r)
}

/// Start `(x₁,y₁,t₁)` and end `(x₀,y₀,t₀)` of an admissible path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsianEndpoints {
    pub x1: f64,
    pub y1: f64,
    pub t1: f64,
    pub x0: f64,
    pub y0: f64,
    pub t0: f64,
}

impl AsianEndpoints {
    pub fn new(start: [f64; 3], end: [f64; 3]) -> Result<Self> {
        let e = AsianEndpoints { x1: start[0], y1: start[1], t1: start[2], x0: end[0], y0: end[1], t0: end[2] };
        e.validate()?;
        Ok(e)
    }

    pub fn from_array(p: [f64; 6]) -> Result<Self> {
        AsianEndpoints::new([p[0], p[1], p[2]], [p[3], p[4], p[5]])
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.x1, self.y1, self.t1, self.x0, self.y0, self.t0]
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.to_array().iter().all(|v| v.is_finite()), || Error::Argument("non-finite endpoint".into()))?;
        ensure(self.x1 > 0.0 && self.x0 > 0.0, || {
            Error::Precondition(format!("prices must be positive, got {} and {}", self.x1, self.x0))
        })?;
        ensure(self.t0 < self.t1, || Error::Precondition(format!("need t0 < t1, got {} >= {}", self.t0, self.t1)))?;
        ensure(self.y0 > self.y1, || Error::Precondition(format!("need y0 > y1, got {} <= {}", self.y0, self.y1)))
    }

    pub fn horizon(&self) -> f64 {
        self.t1 - self.t0
    }

    pub fn rise(&self) -> f64 {
        self.y0 - self.y1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    First,
    Second,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::First => "first",
            Branch::Second => "second",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueDetail {
    pub q: f64,
    pub r: f64,
    pub e: f64,
    pub psi: f64,
    pub branch: Branch,
}

pub fn value_psi(e: &AsianEndpoints) -> Result<f64> {
    Ok(value_psi_detail(e)?.psi)
}

pub fn value_psi_detail(e: &AsianEndpoints) -> Result<ValueDetail> {
    e.validate()?;
    let (t, d) = (e.horizon(), e.rise());
    let q = d / (t * (e.x1 * e.x0).sqrt());
    let r = g_inverse(q)?;
    let psi = 4.0 * r / t + 4.0 * (e.x1 + e.x0) / d - 8.0 * h(r) / t;
    let branch = if r >= -PI * PI / 4.0 { Branch::First } else { Branch::Second };
    Ok(ValueDetail { q, r, e: 4.0 * r / (t * t), psi: psi.max(0.0), branch })
}

/// Which argument triple the fields differentiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Triple {
    First,
    Second,
}

/// Residual convention: `X = a(x)∂ₓ`, `Y = σ x∂_y − ∂_t` on one triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HjbConvention {
    pub triple: Triple,
    pub sigma: i8,
}

impl HjbConvention {
    pub const ALL: [HjbConvention; 4] = [
        HjbConvention { triple: Triple::First, sigma: 1 },
        HjbConvention { triple: Triple::First, sigma: -1 },
        HjbConvention { triple: Triple::Second, sigma: 1 },
        HjbConvention { triple: Triple::Second, sigma: -1 },
    ];

    pub fn name(self) -> String {
        let t = match self.triple {
            Triple::First => "first",
            Triple::Second => "second",
        };
        format!("{t}{}", if self.sigma > 0 { "+" } else { "-" })
    }
}

/// Coefficient of the diffusion field: `∂ₓ` or `x∂ₓ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Kolmogorov,
    Asian,
}

/// Central-difference `YΨ + ¼(XΨ)²` at `p = (x₁,y₁,t₁,x₀,y₀,t₀)`.
pub fn hjb_residual_with<F>(f: &F, p: [f64; 6], conv: HjbConvention, kind: FieldKind, fd: f64) -> Result<f64>
where
    F: Fn(&[f64; 6]) -> Result<f64>,
{
    ensure(fd > 0.0 && fd.is_finite(), || Error::Argument(format!("fd_step must be positive, got {fd}")))?;
    let base = match conv.triple {
        Triple::First => 0,
        Triple::Second => 3,
    };
    let diff = |k: usize| -> Result<f64> {
        let mut a = p;
        let mut b = p;
        a[base + k] += fd;
        b[base + k] -= fd;
        Ok((f(&a)? - f(&b)?) / (2.0 * fd))
    };
    let x = p[base];
    let (dx, dy, dt) = (diff(0)?, diff(1)?, diff(2)?);
    let xpsi = match kind {
        FieldKind::Kolmogorov => dx,
        FieldKind::Asian => x * dx,
    };
    let ypsi = conv.sigma as f64 * x * dy - dt;
    Ok(ypsi + 0.25 * xpsi * xpsi)
}

/// Deterministic Kolmogorov fixture: small coordinates, horizons in `[1.5, 3]`.
pub fn kolmogorov_fixture() -> Vec<[f64; 6]> {
    let frac = |k: usize, a: f64| (k as f64 * a).fract();
    (1..=24)
        .map(|k| {
            let c = |a: f64| frac(k, a) - 0.5;
            let t0 = c(0.754_877_666_2);
            let t1 = t0 + 1.5 + 1.5 * frac(k, 0.569_840_290_9);
            [c(0.414_213_562_4), c(0.732_050_807_6), t1, c(0.236_067_977_5), c(0.645_751_311_1), t0]
        })
        .collect()
}

/// Kolmogorov value in admissible coordinates.
pub fn kolmogorov_value(p: &[f64; 6]) -> Result<f64> {
    path_value(&SpacetimePoint::new(vec![p[0], p[1]], p[2]), &SpacetimePoint::new(vec![p[3], p[4]], p[5]))
}

pub const CALIBRATION_FD: f64 = 1e-5;
pub const CALIBRATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// Largest absolute residual over the fixture, per convention.
    pub residuals: Vec<(HjbConvention, f64)>,
    pub winner: HjbConvention,
}

/// Selects the residual convention in which the Kolmogorov value function
/// solves its HJB equation; exactly one candidate may pass.
pub fn calibrate_hjb(fd: f64) -> Result<Calibration> {
    let fixture = kolmogorov_fixture();
    let mut residuals = Vec::new();
    for conv in HjbConvention::ALL {
        let mut worst: f64 = 0.0;
        for p in &fixture {
            let r = hjb_residual_with(&kolmogorov_value, *p, conv, FieldKind::Kolmogorov, fd)?;
            worst = worst.max(r.abs());
        }
        residuals.push((conv, worst));
    }
    let passing: Vec<_> = residuals.iter().filter(|(_, r)| *r <= CALIBRATION_TOL).collect();
    ensure(passing.len() == 1, || {
        Error::Convergence(format!("{} conventions pass the HJB calibration, expected one", passing.len()))
    })?;
    let winner = passing[0].0;
    Ok(Calibration { residuals, winner })
}

pub fn calibrated_convention() -> Result<HjbConvention> {
    static CELL: OnceLock<Result<HjbConvention>> = OnceLock::new();
    CELL.get_or_init(|| calibrate_hjb(CALIBRATION_FD).map(|c| c.winner)).clone()
}

/// HJB residual of [`value_psi`] in the calibrated convention.
pub fn hjb_residual(e: &AsianEndpoints, fd: f64) -> Result<f64> {
    e.validate()?;
    let conv = calibrated_convention()?;
    let p = e.to_array();
    let base = match conv.triple {
        Triple::First => 0,
        Triple::Second => 3,
    };
    for k in 0..3 {
        for sgn in [-1.0, 1.0] {
            let mut q = p;
            q[base + k] += sgn * fd;
            AsianEndpoints::from_array(q)
                .map_err(|err| Error::Precondition(format!("finite-difference stencil leaves the domain: {err}")))?;
        }
    }
    hjb_residual_with(&|q: &[f64; 6]| value_psi(&AsianEndpoints::from_array(*q)?), p, conv, FieldKind::Asian, fd)
}

/// `ψ(z, t) = ∫₀^∞ e^{−ξ²/(2t)} e^{−z cosh ξ} sinh ξ sin(πξ/t) dξ` to absolute
/// accuracy `tol` (or the rounding floor of each panel, whichever is larger).
pub fn yor_psi(z: f64, t: f64, tol: f64) -> Result<f64> {
    ensure(z > 0.0 && z.is_finite(), || Error::Domain(format!("yor_psi needs z > 0, got {z}")))?;
    ensure(t > 0.0 && t.is_finite(), || Error::Domain(format!("yor_psi needs t > 0, got {t}")))?;
    ensure(tol > 0.0, || Error::Argument("tolerance must be positive".into()))?;
    let log_env = |xi: f64| -xi * xi / (2.0 * t) - z * xi.cosh() + xi.sinh().ln();
    let decreasing = |xi: f64| -xi / t - z * xi.sinh() + 1.0 / xi.tanh() < 0.0;
    let cut = (tol * 1e-3).ln();
    let mut panels = 1usize;
    while !(decreasing(panels as f64 * t) && log_env(panels as f64 * t) < cut) {
        panels += 1;
        ensure(panels < 1_000_000, || Error::Accuracy(format!("yor_psi({z}, {t}) tail never decays")))?;
    }
    let f = |xi: f64| {
        if xi <= 0.0 {
            return 0.0;
        }
        (-xi * xi / (2.0 * t) - z * xi.cosh()).exp() * xi.sinh() * (PI * xi / t).sin()
    };
    let share = tol / (2.0 * panels as f64);
    let mut total = 0.0;
    for k in 0..panels {
        let (a, b) = (k as f64 * t, (k + 1) as f64 * t);
        let (rough, _) = gauss_kronrod15(&f, a, b);
        let floor = 1e-14 * rough.abs();
        total += adaptive(&f, a, b, share.max(floor), 4000)?.value;
    }
    Ok(total)
}

pub const YOR_WINDOW: (f64, f64) = (0.25, 4.0);

/// Joint density of `(X_t, Y_t)` in its closed integral form.
pub fn yor_density(x: f64, y: f64, t: f64, x0: f64, y0: f64) -> Result<f64> {
    ensure(x > 0.0 && x0 > 0.0, || Error::Domain(format!("prices must be positive, got x = {x}, x0 = {x0}")))?;
    ensure(t >= YOR_WINDOW.0 && t <= YOR_WINDOW.1, || {
        Error::Accuracy(format!(
            "t = {t} outside [{}, {}]: the e^(pi^2/t) prefactor against the oscillatory integral loses all digits",
            YOR_WINDOW.0, YOR_WINDOW.1
        ))
    })?;
    if y <= y0 {
        return Ok(0.0);
    }
    let d = y - y0;
    let z = (x * x0).sqrt() / d;
    let pre = x0.sqrt() / (2.0 * x.sqrt() * d * d) * (PI * PI / t).exp() / (PI * (PI * t).sqrt());
    let tail = (-(x + x0) / (2.0 * d)).exp();
    if tail == 0.0 {
        return Ok(0.0);
    }
    let tol = 1e-13 / (pre * tail);
    let v = pre * tail * yor_psi(z, t / 2.0, tol)?;
    Ok(v.max(0.0))
}

/// `(Var X, Var Y, 2x₀²t, ⅔x₀²t³)` for the process started at price `x0`.
pub fn variance_formulas(x0: f64, t: f64) -> (f64, f64, f64, f64) {
    let x2 = x0 * x0;
    let var_x = x2 * (2.0 * t).exp() * (2.0 * t).exp_m1();
    let e1 = t.exp_m1();
    let var_y = x2 * ((4.0 * t).exp_m1() / 6.0 - 2.0 * e1 / 3.0 - e1 * e1);
    (var_x, var_y, 2.0 * x2 * t, 2.0 / 3.0 * x2 * t * t * t)
}

pub const DEFAULT_LOWER: EnvelopeConsts = EnvelopeConsts { amplitude: 0.1, rate: 2.0 };
pub const DEFAULT_UPPER: EnvelopeConsts = EnvelopeConsts { amplitude: 10.0, rate: 0.25 };

/// Two-sided bound envelope at `(x, y, t)` for the kernel with pole
/// `(x0, y0, t0)`, `t > t0`. Zero off the support.
#[allow(clippy::too_many_arguments)]
pub fn asian_envelope(
    side: Side,
    eps: f64,
    consts: EnvelopeConsts,
    x: f64,
    y: f64,
    t: f64,
    x0: f64,
    y0: f64,
    t0: f64,
) -> Result<f64> {
    ensure(eps > 0.0 && eps < 1.0, || Error::Argument(format!("eps must lie in (0, 1), got {eps}")))?;
    ensure([x, y, t, x0, y0, t0].iter().all(|v| v.is_finite()), || Error::Argument("non-finite input".into()))?;
    ensure(x0 > 0.0, || Error::Precondition(format!("pole price must be positive, got {x0}")))?;
    let dt = t - t0;
    if !(x > 0.0) || !(dt > 0.0) {
        return Ok(0.0);
    }
    let pre = consts.amplitude / (x0 * x0 * dt * dt);
    let start = match side {
        Side::Lower => {
            if y >= y0 - x0 * eps * dt {
                return Ok(0.0);
            }
            [x, y + x0 * eps * dt, t - eps * dt]
        }
        Side::Upper => {
            if y >= y0 {
                return Ok(0.0);
            }
            [x, y - x0 * eps, t + eps]
        }
    };
    let psi = value_psi(&AsianEndpoints::new(start, [x0, y0, t0])?)?;
    Ok(pre * (-consts.rate * psi).exp())
}
