//! One function per subcommand.

use std::f64::consts::PI;
use std::fs::File;
use std::io::BufWriter;

use hkbounds::asian::{
    calibrate_hjb as calibrate, hjb_residual, kolmogorov_value, value_psi_detail, yor_density, AsianEndpoints,
    CALIBRATION_FD, CALIBRATION_TOL,
};
use hkbounds::geometry::{group_compose, group_inverse, integrate_path, ModelId, SpacetimePoint};
use hkbounds::harnack::{build_parabolic_chain, build_path_chain, chain_lower_bound, ChainParams, EnvelopeConsts};
use hkbounds::heisenberg::{brute_force_norm, cc_envelope_at, cc_norm, unit_ball_volume, CcTable, Solver};
use hkbounds::kolmogorov::{gamma0, optimal_control_kolmogorov, psi0};
use hkbounds::montecarlo::{
    compare_bounds, estimate_density, euler_maruyama, fit_envelopes, sample_exact, write_batch, AsianScheme, Axis,
    DensityEstimate, EmOptions, FittedEnvelopes, Grid, SampleBatch, Scheme, YorNormalization, COMPARE_POLICY,
};
use serde_json::json;

use crate::config::*;
use crate::output::{fmt_f64, Output};
use crate::CliError;

fn f(v: f64) -> String {
    fmt_f64(v)
}

fn arg(msg: String) -> CliError {
    CliError::Core(hkbounds::Error::Argument(msg))
}

fn em_options(p: &SimulateParams) -> EmOptions {
    let mut o = EmOptions::default();
    if let Some(s) = p.asian_scheme {
        o.asian_scheme = match s {
            AsianSchemeCfg::Euler => AsianScheme::Euler,
            AsianSchemeCfg::LogExact => AsianScheme::LogExact,
        };
    }
    if let Some(y) = p.yor {
        o.yor = match y {
            YorCfg::Operator => YorNormalization::Operator,
            YorCfg::UnitDiffusion => YorNormalization::UnitDiffusion,
            YorCfg::DensityFormula => YorNormalization::DensityFormula,
        };
    }
    if let Some(l) = p.levy_area {
        o.levy_area = l;
    }
    if let Some(s) = p.diffusion_scale {
        o.diffusion_scale = s;
    }
    o
}

fn draw(model: ModelId, p: &SimulateParams) -> Result<SampleBatch, CliError> {
    Ok(match p.dt {
        Some(dt) => euler_maruyama(model, &p.z0, p.horizon, dt, p.n, p.seed, &em_options(p))?,
        None => sample_exact(model, &p.z0, p.horizon, p.n, p.seed)?,
    })
}

pub fn simulate(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let model = cfg.model()?;
    let p: SimulateParams = cfg.params()?;
    let batch = draw(model, &p)?;
    let mut w = BufWriter::new(File::create(out.path("batch.bin"))?);
    write_batch(&batch, &mut w)?;
    drop(w);
    let mean = batch.mean();
    let cov = batch.covariance();
    let rows: Vec<Vec<String>> = (0..batch.dims).map(|j| vec![j.to_string(), f(mean[j]), f(cov[j][j])]).collect();
    out.csv("moments.csv", &["coordinate", "mean", "variance"], &rows)?;
    if p.endpoints_csv {
        let header: Vec<String> = (0..batch.dims).map(|j| format!("z{j}")).collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows: Vec<Vec<String>> = batch.rows().map(|r| r.iter().map(|v| f(*v)).collect()).collect();
        out.csv("endpoints.csv", &header, &rows)?;
    }
    let dt = match batch.scheme {
        Scheme::Exact => None,
        Scheme::Euler { dt } => Some(dt),
    };
    out.json(
        "summary.json",
        &json!({
            "model": model.name(),
            "n": batch.n,
            "seed": batch.seed,
            "horizon": batch.horizon,
            "scheme": if dt.is_some() { "euler" } else { "exact" },
            "dt": dt,
            "reflections": batch.diagnostics.reflections,
        }),
    )
}

pub fn density_eval(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let p: DensityEvalParams = cfg.params()?;
    let (header, width): (&[&str], usize) = match p.kernel {
        Kernel::Gamma0 | Kernel::Psi0 => (&["x", "y", "t", "xi", "eta", "tau", "value"], 6),
        Kernel::Yor => (&["x", "y", "t", "x0", "y0", "value"], 5),
    };
    let mut rows = Vec::with_capacity(p.points.len());
    for q in &p.points {
        if q.len() != width {
            return Err(arg(format!("{:?} points need {width} coordinates, got {}", p.kernel, q.len())));
        }
        let v = match p.kernel {
            Kernel::Gamma0 => gamma0(q[0], q[1], q[2], q[3], q[4], q[5]),
            Kernel::Psi0 => psi0(q[0], q[1], q[2], q[3], q[4], q[5])?,
            Kernel::Yor => yor_density(q[0], q[1], q[2], q[3], q[4])?,
        };
        let mut row: Vec<String> = q.iter().map(|v| f(*v)).collect();
        row.push(f(v));
        rows.push(row);
    }
    out.csv("density.csv", header, &rows)
}

/// Branch selected by the thresholds exactly as printed, in terms of
/// `E` and `t₁ − t₀`.
fn printed_branch(e: f64, t: f64) -> &'static str {
    if e >= -PI * PI / t {
        "first"
    } else if e > -4.0 * PI * PI / t {
        "second"
    } else {
        "none"
    }
}

pub fn value_fn(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let model = cfg.model()?;
    let p: ValueFnParams = cfg.params()?;
    let coords = ["x1", "y1", "t1", "x0", "y0", "t0"];
    match model {
        ModelId::Asian => {
            let mut header: Vec<&str> = coords.to_vec();
            header.extend(["q", "r", "E", "psi", "branch"]);
            if p.verbose {
                header.push("printed_branch");
            }
            if p.fd_step.is_some() {
                header.push("hjb_residual");
            }
            let mut rows = Vec::new();
            for q in &p.points {
                let e = AsianEndpoints::from_array(*q)?;
                let d = value_psi_detail(&e)?;
                let mut row: Vec<String> = q.iter().map(|v| f(*v)).collect();
                row.extend([f(d.q), f(d.r), f(d.e), f(d.psi), d.branch.name().to_string()]);
                if p.verbose {
                    row.push(printed_branch(d.e, e.horizon()).into());
                }
                if let Some(fd) = p.fd_step {
                    row.push(f(hjb_residual(&e, fd)?));
                }
                rows.push(row);
            }
            out.csv("value.csv", &header, &rows)
        }
        ModelId::Kolmogorov => {
            let mut header: Vec<&str> = coords.to_vec();
            header.push("psi");
            let mut rows = Vec::new();
            for q in &p.points {
                let mut row: Vec<String> = q.iter().map(|v| f(*v)).collect();
                row.push(f(kolmogorov_value(q)?));
                rows.push(row);
            }
            out.csv("value.csv", &header, &rows)
        }
        other => Err(CliError::Core(hkbounds::Error::Unsupported(format!("no value function for {}", other.name())))),
    }
}

fn split_point(v: &[f64]) -> Result<SpacetimePoint, CliError> {
    match v.split_last() {
        Some((t, x)) if !x.is_empty() => Ok(SpacetimePoint::new(x.to_vec(), *t)),
        _ => Err(arg("a point needs space coordinates followed by time".into())),
    }
}

pub fn chain(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let p: ChainParamsCfg = cfg.params()?;
    let d = ChainParams::default();
    let params = ChainParams {
        m: p.m.unwrap_or(d.m),
        h: p.h.unwrap_or(d.h),
        c: p.c.unwrap_or(d.c),
        theta: p.theta.unwrap_or(d.theta),
    };
    let (a, b) = (split_point(&p.start)?, split_point(&p.end)?);
    let chain = match p.kind {
        ChainKind::Parabolic => build_parabolic_chain(&a.x, a.t, &b.x, b.t, &params)?,
        ChainKind::KolmogorovOptimal => {
            let omega = optimal_control_kolmogorov(&a, &b)?;
            let path = integrate_path(ModelId::Kolmogorov, &a, &omega, omega.min_interval())?;
            build_path_chain(&path, &params)?
        }
    };
    std::fs::write(out.path("chain.csv"), chain.to_csv())?;
    let lower = p.u_known.map(|u| chain_lower_bound(&chain, &params, u)).transpose()?;
    out.json(
        "chain.json",
        &json!({
            "k": chain.k(),
            "bound_exponent": chain.bound_exponent(),
            "points": chain.points.len(),
            "m": params.m,
            "lower_bound": lower,
        }),
    )
}

pub fn cc_distance(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let p: CcDistanceParams = cfg.params()?;
    let h = ModelId::Heisenberg;
    let mut rows = Vec::new();
    for pair in &p.pairs {
        let (a, b) = ([pair[0], pair[1], pair[2]], [pair[3], pair[4], pair[5]]);
        let rel = group_compose(
            h,
            &group_inverse(h, &SpacetimePoint::new(a.to_vec(), 0.0))?,
            &SpacetimePoint::new(b.to_vec(), 0.0),
        )?;
        let target = [rel.x[0], rel.x[1], rel.x[2]];
        let r = match p.solver {
            SolverCfg::Auto => cc_norm(target)?,
            SolverCfg::BruteForce => brute_force_norm(target, p.intervals)?,
            SolverCfg::Shooting => {
                let r = cc_norm(target)?;
                if r.solver != Solver::Shooting {
                    return Err(CliError::Core(hkbounds::Error::Convergence(format!(
                        "shooting failed for {target:?}"
                    ))));
                }
                r
            }
        };
        let mut row: Vec<String> = pair.iter().map(|v| f(*v)).collect();
        row.extend([f(r.distance), r.solver.name().to_string(), f(r.residual)]);
        rows.push(row);
    }
    out.csv("cc.csv", &["px", "py", "pw", "qx", "qy", "qw", "distance", "solver", "residual"], &rows)
}

/// Envelope shape `prefactor(z) · exp(−rate · feature(z))` of a model
/// started at `z0` and observed after `s`.
struct Shape {
    model: ModelId,
    z0: Vec<f64>,
    s: f64,
    unit_volume: f64,
}

impl Shape {
    fn prefactor(&self) -> f64 {
        match self.model {
            ModelId::Heat(n) => self.s.powf(-(n as f64) / 2.0),
            ModelId::Kolmogorov => self.s.powi(-2),
            ModelId::Heisenberg => {
                cc_envelope_at(EnvelopeConsts::new(1.0, 0.0), 0.0, self.s, self.unit_volume).unwrap_or(f64::NAN)
            }
            _ => f64::NAN,
        }
    }

    fn feature(&self, z: &[f64]) -> f64 {
        let s = self.s;
        match self.model {
            ModelId::Heat(_) => z.iter().zip(&self.z0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / s,
            ModelId::Kolmogorov => psi0(z[0], z[1], s, self.z0[0], self.z0[1], 0.0).unwrap_or(f64::NAN),
            ModelId::Heisenberg => {
                let d = CcTable::global().distance([self.z0[0], self.z0[1], self.z0[2]], [z[0], z[1], z[2]]);
                d * d / s
            }
            _ => f64::NAN,
        }
    }
}

fn grid_for(model: ModelId, axes: &[AxisCfg]) -> Result<(Grid, Vec<usize>), CliError> {
    let d = model.spatial_dim();
    let mut cols: Vec<usize> = axes.iter().map(|a| a.column).collect();
    cols.sort_unstable();
    if cols != (0..d).collect::<Vec<_>>() {
        return Err(arg(format!("the grid needs exactly one axis per coordinate 0..{d}")));
    }
    let grid =
        Grid::new(
            axes.iter()
                .map(|a| {
                    if a.log {
                        Axis::log(a.column, a.lo, a.hi, a.bins)
                    } else {
                        Axis::new(a.column, a.lo, a.hi, a.bins)
                    }
                })
                .collect(),
        )?;
    Ok((grid, axes.iter().map(|a| a.column).collect()))
}

fn state(centre: &[f64], columns: &[usize]) -> Vec<f64> {
    let mut z = vec![0.0; columns.len()];
    for (c, &j) in centre.iter().zip(columns) {
        z[j] = *c;
    }
    z
}

pub fn verify(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let model = cfg.model()?;
    if !matches!(model, ModelId::Heat(_) | ModelId::Kolmogorov | ModelId::Heisenberg) {
        return Err(CliError::Core(hkbounds::Error::Unsupported(format!(
            "verify supports heatN, kolmogorov and heisenberg, not {}",
            model.name()
        ))));
    }
    let p: VerifyParams = cfg.params()?;
    let (grid, columns) = grid_for(model, &p.grid)?;
    let unit_volume = match (&p.unit_volume, model) {
        (Some(v), _) => unit_ball_volume(v.n, v.seed)?.volume,
        (None, ModelId::Heisenberg) => return Err(arg("heisenberg verification needs unit_volume".into())),
        (None, _) => f64::NAN,
    };
    let shape = Shape { model, z0: p.z0.clone(), s: p.horizon, unit_volume };
    let pref = shape.prefactor();
    let feature = |c: &[f64]| shape.feature(&state(c, &columns));
    let include = |c: &[f64]| p.feature_max.is_none_or(|m| feature(c) <= m);
    let sample = |seed: u64| -> Result<DensityEstimate, CliError> {
        let sp = SimulateParams {
            z0: p.z0.clone(),
            horizon: p.horizon,
            n: p.n,
            seed,
            dt: p.dt,
            asian_scheme: None,
            yor: None,
            levy_area: None,
            diffusion_scale: None,
            endpoints_csv: false,
        };
        Ok(estimate_density(&draw(model, &sp)?, &grid)?)
    };

    let (lower, upper, fitted): (EnvelopeConsts, EnvelopeConsts, Option<FittedEnvelopes>) = match &p.fit {
        Some(fit) => {
            if fit.seed == p.seed {
                return Err(arg("the fitting seed must differ from the verification seed".into()));
            }
            let est = sample(fit.seed)?;
            let r = fit_envelopes(&est, |_| pref, feature, include, fit.min_count, fit.margin)?;
            (r.lower, r.upper, Some(r))
        }
        None => match (p.lower, p.upper) {
            (Some(l), Some(u)) => (l.into(), u.into(), None),
            _ => return Err(arg("verify needs lower and upper constants or a fit section".into())),
        },
    };
    let est = sample(p.seed)?;
    let lo_env = |c: &[f64]| FittedEnvelopes::eval(lower, pref, feature(c));
    let hi_env = |c: &[f64]| FittedEnvelopes::eval(upper, pref, feature(c));
    let report = compare_bounds(&est, lo_env, hi_env, include);

    let mut header: Vec<String> = p.grid.iter().map(|a| format!("z{}", a.column)).collect();
    header.extend(["count", "density", "ci_lo", "ci_hi", "lower", "upper", "checked"].map(String::from));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut rows = Vec::with_capacity(grid.cells());
    for cell in 0..grid.cells() {
        let c = grid.centre(cell);
        let (lo, hi) = est.interval(cell);
        let mut row: Vec<String> = c.iter().map(|v| f(*v)).collect();
        row.extend([
            est.counts[cell].to_string(),
            f(est.density(cell)),
            f(lo),
            f(hi),
            f(lo_env(&c)),
            f(hi_env(&c)),
            include(&c).to_string(),
        ]);
        rows.push(row);
    }
    out.csv("cells.csv", &header, &rows)?;
    out.json(
        "report.json",
        &json!({
            "model": model.name(),
            "n": p.n,
            "seed": p.seed,
            "fit_seed": p.fit.as_ref().map(|f| f.seed),
            "fit_r2": fitted.map(|f| f.fit.r2),
            "lower": {"amplitude": lower.amplitude, "rate": lower.rate},
            "upper": {"amplitude": upper.amplitude, "rate": upper.rate},
            "unit_volume": p.unit_volume.as_ref().map(|_| unit_volume),
            "outside": est.outside,
            "cells_checked": report.cells_checked,
            "lower_violations": report.lower_violations,
            "upper_violations": report.upper_violations,
            "violation_fraction": report.violation_fraction,
            "policy": COMPARE_POLICY,
        }),
    )
}

pub fn calibrate_hjb(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let p: CalibrateParams = cfg.params()?;
    let fd = p.fd_step.unwrap_or(CALIBRATION_FD);
    let c = calibrate(fd)?;
    let rows: Vec<Vec<String>> =
        c.residuals.iter().map(|(conv, r)| vec![conv.name(), f(*r), (*r <= CALIBRATION_TOL).to_string()]).collect();
    out.csv("calibration.csv", &["convention", "max_residual", "pass"], &rows)?;
    out.json("calibration.json", &json!({"fd_step": fd, "tolerance": CALIBRATION_TOL, "winner": c.winner.name()}))
}
