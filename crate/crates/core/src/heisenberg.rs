//! Carnot–Carathéodory distance, metric balls and kernel envelopes on the
//! Heisenberg group with fields `X₁ = ∂ₓ − (y/2)∂_w`, `X₂ = ∂_y + (x/2)∂_w`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure, Error, Result};
use crate::geometry::{group_compose, group_inverse, ControlPath, ModelId, SpacetimePoint};
use crate::harnack::{EnvelopeConsts, Side};
use crate::ode::rk4_integrate;
use crate::optimize::powell;

const SHOOT_STEPS: usize = 256;
const GEODESIC_PIECES: usize = 4096;
const BRUTE_INTERVALS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Shooting,
    BruteForce,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Shooting => "shooting",
            Solver::BruteForce => "brute-force",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CCResult {
    pub distance: f64,
    /// Control on `[0, 1]` steering the origin to the reduced target.
    pub control: ControlPath,
    pub solver: Solver,
    /// Endpoint mismatch of the solver, scaled to unit distance.
    pub residual: f64,
}

fn to_point(p: [f64; 3]) -> SpacetimePoint {
    SpacetimePoint::new(p.to_vec(), 0.0)
}

/// `d_CC(p, q) = d_CC(0, p⁻¹∘q)`.
pub fn cc_distance(p: [f64; 3], q: [f64; 3]) -> Result<CCResult> {
    let h = ModelId::Heisenberg;
    let rel = group_compose(h, &group_inverse(h, &to_point(p))?, &to_point(q))?;
    cc_norm([rel.x[0], rel.x[1], rel.x[2]])
}

/// Distance from the origin; shooting first, brute force when it fails.
pub fn cc_norm(target: [f64; 3]) -> Result<CCResult> {
    ensure(target.iter().all(|v| v.is_finite()), || Error::Argument("non-finite target".into()))?;
    if target.iter().all(|&v| v == 0.0) {
        return Ok(CCResult {
            distance: 0.0,
            control: ControlPath::constant(vec![0.0, 0.0], 1.0)?,
            solver: Solver::Shooting,
            residual: 0.0,
        });
    }
    match shoot(target) {
        Some(r) => Ok(r),
        None => brute_force_norm(target, BRUTE_INTERVALS),
    }
}

fn scale_of(target: [f64; 3]) -> f64 {
    target[0].hypot(target[1]) + target[2].abs().sqrt()
}

/// Endpoint of the normal extremal with initial covector angle `phi`,
/// vertical momentum `lam` and speed `len` at unit time.
fn extremal_endpoint(phi: f64, lam: f64, len: f64) -> [f64; 3] {
    let mut state = [0.0, 0.0, 0.0, len * phi.cos(), len * phi.sin()];
    rk4_integrate(
        |s: &[f64], d: &mut [f64]| {
            d[0] = s[3];
            d[1] = s[4];
            d[2] = 0.5 * (s[0] * s[4] - s[1] * s[3]);
            d[3] = -lam * s[4];
            d[4] = lam * s[3];
        },
        &mut state,
        1.0,
        SHOOT_STEPS,
    );
    [state[0], state[1], state[2]]
}

fn mismatch(params: [f64; 3], target: [f64; 3], scale: f64) -> Vector3<f64> {
    let e = extremal_endpoint(params[0], params[1], params[2]);
    Vector3::new((e[0] - target[0]) / scale, (e[1] - target[1]) / scale, (e[2] - target[2]) / (scale * scale))
}

/// Levenberg–Marquardt on `(phi, lam, len)`.
fn refine(mut p: [f64; 3], target: [f64; 3], scale: f64) -> Option<([f64; 3], f64)> {
    let mut f = mismatch(p, target, scale);
    let mut mu = 1e-3;
    for _ in 0..80 {
        if f.norm() <= 1e-12 {
            break;
        }
        let mut jac = Matrix3::zeros();
        for k in 0..3 {
            let h = 1e-7 * (1.0 + p[k].abs());
            let mut q = p;
            q[k] += h;
            jac.set_column(k, &((mismatch(q, target, scale) - f) / h));
        }
        let jtj = jac.transpose() * jac;
        let g = jac.transpose() * f;
        let mut improved = false;
        for _ in 0..30 {
            let damped = jtj + Matrix3::from_diagonal(&jtj.diagonal().map(|d| mu * (d + 1e-12)));
            let Some(step) = damped.lu().solve(&(-g)) else {
                mu *= 10.0;
                continue;
            };
            let q = [p[0] + step[0], p[1] + step[1], p[2] + step[2]];
            let fq = mismatch(q, target, scale);
            if fq.norm() < f.norm() {
                p = q;
                f = fq;
                mu = (mu * 0.3).max(1e-15);
                improved = true;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    if p[2] < 0.0 {
        p = [p[0] + PI, p[1], -p[2]];
    }
    Some((p, f.norm()))
}

fn shoot(target: [f64; 3]) -> Option<CCResult> {
    let scale = scale_of(target);
    let rho = target[0].hypot(target[1]);
    let mut starts: Vec<(f64, [f64; 3])> = Vec::new();
    for i in 0..16 {
        let phi = 2.0 * PI * i as f64 / 16.0;
        for j in 0..8 {
            let lam = -2.0 * PI + (j as f64 + 0.5) * PI / 2.0;
            let unit = extremal_endpoint(phi, lam, 1.0);
            let pr = unit[0].hypot(unit[1]);
            let mut lens = Vec::new();
            if pr > 1e-12 && rho > 0.0 {
                lens.push(rho / pr);
            }
            if unit[2] * target[2] > 0.0 {
                lens.push((target[2] / unit[2]).sqrt());
            }
            for len in lens {
                let m = mismatch([phi, lam, len], target, scale).norm();
                starts.push((m, [phi, lam, len]));
            }
        }
    }
    starts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best: Option<([f64; 3], f64)> = None;
    for (_, s) in starts.into_iter().take(6) {
        if let Some((p, res)) = refine(s, target, scale) {
            if res <= 1e-9 && p[1].abs() <= 2.0 * PI * (1.0 + 1e-6) && p[2] >= 0.0 {
                if best.map_or(true, |(b, _)| p[2] < b[2]) {
                    best = Some((p, res));
                }
            }
        }
    }
    let (p, residual) = best?;
    let control = geodesic_control(p[0], p[1], p[2]).ok()?;
    Some(CCResult { distance: p[2], control, solver: Solver::Shooting, residual })
}

/// Piecewise-constant control whose interval averages equal the rotating
/// extremal control `len·(cos(phi+lam s), sin(phi+lam s))`.
fn geodesic_control(phi: f64, lam: f64, len: f64) -> Result<ControlPath> {
    let n = GEODESIC_PIECES;
    let dt = 1.0 / n as f64;
    let half = 0.5 * lam * dt;
    let sinc = if half.abs() < 1e-8 { 1.0 - half * half / 6.0 } else { half.sin() / half };
    let values = (0..n)
        .map(|k| {
            let a = phi + lam * (k as f64 + 0.5) * dt;
            vec![len * sinc * a.cos(), len * sinc * a.sin()]
        })
        .collect();
    ControlPath::uniform(values, 1.0)
}

/// Independent route: minimises the cost of `intervals` constant controls
/// reaching `target` at unit time, with Powell's method, and reports the
/// length `√Φ` of the constant-speed reparametrisation.
pub fn brute_force_norm(target: [f64; 3], intervals: usize) -> Result<CCResult> {
    ensure(intervals >= 3, || Error::Argument("brute force needs at least 3 intervals".into()))?;
    let n = intervals;
    let dt = 1.0 / n as f64;
    let c = [target[0], target[1]];
    let w = target[2];
    let cross = |a: [f64; 2], b: [f64; 2]| a[0] * b[1] - a[1] * b[0];

    // Returns (cost, alpha, centred v) for a raw direction vector.
    let solve = |raw: &[f64]| -> (f64, f64, Vec<[f64; 2]>) {
        let mut v: Vec<[f64; 2]> = raw.chunks(2).map(|p| [p[0], p[1]]).collect();
        let mean = v.iter().fold([0.0, 0.0], |m, p| [m[0] + p[0] / n as f64, m[1] + p[1] / n as f64]);
        for p in v.iter_mut() {
            p[0] -= mean[0];
            p[1] -= mean[1];
        }
        let mut big_v = [0.0, 0.0];
        let (mut a, mut b) = (0.0, 0.0);
        for (i, vi) in v.iter().enumerate() {
            b += i as f64 * cross(c, *vi) + cross(big_v, c);
            a += cross(big_v, *vi);
            big_v[0] += vi[0];
            big_v[1] += vi[1];
        }
        a *= 0.5 * dt * dt;
        b *= 0.5 * dt * dt;
        let norm2: f64 = v.iter().map(|p| p[0] * p[0] + p[1] * p[1]).sum::<f64>() * dt;
        let base = c[0] * c[0] + c[1] * c[1];
        let alpha = if w == 0.0 {
            Some(0.0)
        } else if a.abs() < 1e-300 {
            if b != 0.0 {
                Some(w / b)
            } else {
                None
            }
        } else {
            let disc = b * b + 4.0 * a * w;
            if disc < 0.0 {
                None
            } else {
                let sq = disc.sqrt();
                let q = -0.5 * (b + b.signum() * sq);
                let (r1, r2) = (q / a, if q != 0.0 { -w / q } else { f64::INFINITY });
                Some(if r1.abs() < r2.abs() { r1 } else { r2 })
            }
        };
        match alpha {
            Some(al) if al.is_finite() && norm2 > 0.0 || alpha == Some(0.0) => (base + al * al * norm2, al, v),
            _ => (1e6 * (1.0 + base + w.abs()), 0.0, v),
        }
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 0..4 {
        let shift = PI * (k / 2) as f64 / 2.0;
        let turn = if k % 2 == 0 { 1.0 } else { -1.0 };
        let start: Vec<f64> = (0..n)
            .flat_map(|i| {
                let a = turn * 2.0 * PI * (i as f64 + 0.5) / n as f64 + shift;
                [a.cos(), a.sin()]
            })
            .collect();
        let m = powell(|x: &[f64]| solve(x).0, &start, 1e-15, 400);
        if best.as_ref().map_or(true, |(v, _)| m.value < *v) {
            best = Some((m.value, m.x));
        }
    }
    let (cost, raw) = best.unwrap();
    let (_, alpha, v) = solve(&raw);
    ensure(cost < 1e6, || Error::Convergence(format!("brute force found no control reaching {target:?}")))?;
    let values: Vec<Vec<f64>> = v.iter().map(|p| vec![c[0] + alpha * p[0], c[1] + alpha * p[1]]).collect();
    let control = ControlPath::uniform(values, 1.0)?;
    // Exact endpoint of the polygonal path.
    let (mut px, mut py, mut pw) = (0.0, 0.0, 0.0);
    for u in control.values() {
        pw += 0.5 * dt * (px * u[1] - py * u[0]);
        px += dt * u[0];
        py += dt * u[1];
    }
    let scale = scale_of(target);
    let residual = ((px - target[0]).hypot(py - target[1]) / scale).max((pw - target[2]).abs() / (scale * scale));
    Ok(CCResult { distance: cost.sqrt(), control, solver: Solver::BruteForce, residual })
}

const TABLE_NODES: usize = 129;

/// Interpolated distance from the origin using rotation invariance, the
/// reflection `w ↦ −w` and homogeneity: `d = ρ F(√|w|/ρ)` for `|w| ≤ ρ²`
/// and `d = √|w| G(ρ/√|w|)` otherwise.
#[derive(Debug, Clone)]
pub struct CcTable {
    f: Vec<f64>,
    g: Vec<f64>,
}

fn lagrange4(nodes: &[f64], u: f64) -> f64 {
    let n = nodes.len() - 1;
    let pos = (u.clamp(0.0, 1.0) * n as f64).min(n as f64);
    let i0 = (pos.floor() as isize - 1).clamp(0, n as isize - 3) as usize;
    let mut acc = 0.0;
    for a in 0..4 {
        let mut l = 1.0;
        for b in 0..4 {
            if a != b {
                l *= (pos - (i0 + b) as f64) / (a as f64 - b as f64);
            }
        }
        acc += l * nodes[i0 + a];
    }
    acc
}

impl CcTable {
    pub fn build() -> Result<Self> {
        let grid = |k: usize| k as f64 / (TABLE_NODES - 1) as f64;
        let mut f = Vec::with_capacity(TABLE_NODES);
        let mut g = Vec::with_capacity(TABLE_NODES);
        for k in 0..TABLE_NODES {
            let a = grid(k);
            f.push(cc_norm([1.0, 0.0, a * a])?.distance);
            g.push(cc_norm([a, 0.0, 1.0])?.distance);
        }
        Ok(CcTable { f, g })
    }

    /// Process-wide table, built on first use.
    pub fn global() -> &'static CcTable {
        static TABLE: OnceLock<CcTable> = OnceLock::new();
        TABLE.get_or_init(|| CcTable::build().expect("distance table construction"))
    }

    pub fn norm(&self, target: [f64; 3]) -> f64 {
        let rho = target[0].hypot(target[1]);
        let sw = target[2].abs().sqrt();
        if rho == 0.0 && sw == 0.0 {
            0.0
        } else if sw <= rho {
            rho * lagrange4(&self.f, sw / rho)
        } else {
            sw * lagrange4(&self.g, rho / sw)
        }
    }

    pub fn distance(&self, p: [f64; 3], q: [f64; 3]) -> f64 {
        let d = [q[0] - p[0], q[1] - p[1], q[2] - p[2] - 0.5 * (p[0] * q[1] - p[1] * q[0])];
        self.norm(d)
    }
}

/// `|B_r| = r⁴ |B_1|`.
pub fn ball_volume(r: f64, unit_volume: f64) -> Result<f64> {
    ensure(r > 0.0 && unit_volume > 0.0, || Error::Argument("radius and unit volume must be positive".into()))?;
    Ok(unit_volume * r.powi(4))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeEstimate {
    pub volume: f64,
    /// 99% confidence half-width.
    pub half_width: f64,
    pub n: usize,
}

/// Rejection estimate of `|B_1(0)|` over `[−1,1]² × [−1/(2π), 1/(2π)]`.
pub fn unit_ball_volume(n: usize, seed: u64) -> Result<VolumeEstimate> {
    ensure(n > 0, || Error::Argument("need at least one sample".into()))?;
    let table = CcTable::global();
    let wmax = 0.5 / PI;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..n {
        let p = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-wmax..wmax)];
        if table.norm(p) <= 1.0 {
            hits += 1;
        }
    }
    let box_volume = 4.0 * 2.0 * wmax;
    let frac = hits as f64 / n as f64;
    let half_width = 2.575_829_3 * box_volume * (frac * (1.0 - frac) / n as f64).sqrt();
    Ok(VolumeEstimate { volume: box_volume * frac, half_width, n })
}

/// `amplitude / √|B_{t−τ}| · exp(−rate d²/(t−τ))`.
pub fn cc_envelope(
    _side: Side,
    consts: EnvelopeConsts,
    x: [f64; 3],
    t: f64,
    xi: [f64; 3],
    tau: f64,
    unit_volume: f64,
) -> Result<f64> {
    let dt = t - tau;
    ensure(dt > 0.0, || Error::Precondition(format!("envelope needs t > tau, got t - tau = {dt}")))?;
    let d = CcTable::global().distance(xi, x);
    cc_envelope_at(consts, d, dt, unit_volume)
}

/// Envelope in terms of a known distance `d` and time gap `dt`.
pub fn cc_envelope_at(consts: EnvelopeConsts, d: f64, dt: f64, unit_volume: f64) -> Result<f64> {
    ensure(dt > 0.0, || Error::Precondition(format!("envelope needs a positive time gap, got {dt}")))?;
    Ok(consts.amplitude / ball_volume(dt, unit_volume)?.sqrt() * (-consts.rate * d * d / dt).exp())
}
