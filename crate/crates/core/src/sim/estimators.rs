//! Path-integral estimators on a [`PathEnsemble`].
//!
//! Time integrals use the trapezoid rule on the simulation grid and stop at
//! `t_max`. Primal-type estimates leave the remainder out and report a bound
//! on it; dual-type estimates add the remainder in closed form, which is
//! available because the deflator uses a constant `gamma`.

use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{perpetual_value, DiscountMeasure, HorizonVariant, MarketParams, PowerUtility};
use crate::sim::{DeflatorSpec, Path, PathEnsemble};
use crate::stats::Estimate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrimalEstimate {
    /// Integral over `[0, t_max]`.
    pub value: Estimate,
    /// `e^{-delta t_max} E[u_inf(X_{t_max})]`, bounding the omitted remainder
    /// (zero for finite-horizon measures).
    pub tail_bound: f64,
    pub absorbed_fraction: f64,
}

impl PrimalEstimate {
    /// Distance from `target` to `[mean, mean + tail_bound]`.
    pub fn distance_to(&self, target: f64) -> f64 {
        let lo = self.value.mean;
        let hi = lo + self.tail_bound;
        if target < lo {
            lo - target
        } else if target > hi {
            target - hi
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualEstimate {
    /// Monte Carlo part plus `tail`.
    pub value: Estimate,
    /// Closed-form contribution of `(t_max, inf)`; `+inf` if the dual diverges.
    pub tail: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetEstimate {
    /// `E[int_0^T (c - f) Y dt] - E[int_T^inf f Y dt]`: exact when `c = 0`
    /// after `T`, otherwise a lower estimate.
    pub flow: Estimate,
    /// `E[int_0^T (c - f) Y dt + X_T Y_T]`: an upper estimate of
    /// `E[int_0^inf (c - f) Y dt]`, exact for plans that saturate the
    /// budget after `T`.
    pub saturated: Estimate,
}

fn horizon_index(ens: &PathEnsemble, measure: &DiscountMeasure) -> Result<usize> {
    match measure.horizon() {
        None => Ok(ens.n_steps()),
        Some(h) => {
            let cfg = ens.config();
            let steps = h / cfg.dt;
            if h > cfg.t_max + 1e-9 || (steps - steps.round()).abs() > 1e-6 * steps.max(1.0) {
                return Err(Error::Config(format!(
                    "measure horizon {h} must be a grid time within t_max = {}",
                    cfg.t_max
                )));
            }
            Ok(steps.round() as usize)
        }
    }
}

/// Trapezoid weight of node `j` on `[0, m]`.
fn weight(j: usize, m: usize, dt: f64) -> f64 {
    if j == 0 || j == m {
        0.5 * dt
    } else {
        dt
    }
}

fn income_rate(ens: &PathEnsemble, path: &Path, j: usize) -> f64 {
    ens.params().a * path.income_indicator(ens.time(j))
}

fn primal_tail(ens: &PathEnsemble, measure: &DiscountMeasure, uinf_mean: f64) -> f64 {
    match measure.variant {
        HorizonVariant::InfiniteHorizon => {
            (-ens.params().delta * ens.config().t_max).exp() * uinf_mean
        }
        _ => 0.0,
    }
}

/// `E[int U(c_t) d kappa_t]` (plus `U(X_T)` at the terminal atom).
pub fn estimate_primal(ens: &PathEnsemble, measure: &DiscountMeasure) -> Result<PrimalEstimate> {
    let m = horizon_index(ens, measure)?;
    let n = ens.n_steps();
    let dt = ens.config().dt;
    let params = *ens.params();
    let util = PowerUtility::new(params.p);
    let stats = ens.moments(3, |path, out| {
        let mut acc = 0.0;
        for j in 0..=m {
            acc +=
                weight(j, m, dt) * measure.density(ens.time(j)) * util.value(path.consumption[j]);
        }
        if measure.atom().is_some() {
            acc += util.value(path.wealth[m]);
        }
        out[0] = acc;
        out[1] = perpetual_value(path.wealth[n], &params).unwrap_or(f64::NAN);
        out[2] = if path.absorbed_at.is_some() { 1.0 } else { 0.0 };
    });
    Ok(PrimalEstimate {
        value: stats[0].estimate(),
        tail_bound: primal_tail(ens, measure, stats[1].mean),
        absorbed_fraction: stats[2].mean,
    })
}

/// `E[int U'(c_t)(c_t - f_t) d kappa_t]`, with zero contribution wherever
/// consumption is zero.
pub fn estimate_marginal_identity(
    ens: &PathEnsemble,
    measure: &DiscountMeasure,
) -> Result<PrimalEstimate> {
    let m = horizon_index(ens, measure)?;
    let n = ens.n_steps();
    let dt = ens.config().dt;
    let params = *ens.params();
    let util = PowerUtility::new(params.p);
    let stats = ens.moments(3, |path, out| {
        let mut acc = 0.0;
        for j in 0..=m {
            let c = path.consumption[j];
            if c > 0.0 {
                let t = ens.time(j);
                let f = income_rate(ens, path, j) * measure.income_cutoff(t);
                acc += weight(j, m, dt) * measure.density(t) * util.marginal(c) * (c - f);
            }
        }
        if measure.atom().is_some() && path.wealth[m] > 0.0 {
            acc += util.marginal(path.wealth[m]) * path.wealth[m];
        }
        out[0] = acc;
        out[1] = perpetual_value(path.wealth[n], &params).unwrap_or(f64::NAN);
        out[2] = if path.absorbed_at.is_some() { 1.0 } else { 0.0 };
    });
    Ok(PrimalEstimate {
        value: stats[0].estimate(),
        tail_bound: primal_tail(ens, measure, stats[1].mean),
        absorbed_fraction: stats[2].mean,
    })
}

/// `int_T^inf e^{-delta t} E[V(Y_t zeta_t)] dt` for constant `gamma` on the
/// infinite horizon: `(-y^q/q) int_T^inf e^{-K t} E[Gamma_t^q] dt` with
/// `E[Gamma_t^q] = (1-B) e^{-beta t} + B`, `beta = eta (1 + gamma q)`,
/// `B = eta (1+gamma)^q / beta`.
pub fn conjugate_tail(params: &MarketParams, deflator: &DeflatorSpec, t: f64) -> Result<f64> {
    let d = params.derive_constants()?;
    let (q, k) = (d.q, d.k);
    let scale = -deflator.y.powf(q) / q;
    let g = deflator.gamma;
    let jump = params.eta * (1.0 + g).powf(q);
    let beta = params.eta * (1.0 + g * q);
    let integral = if beta.abs() < 1e-14 {
        (-k * t).exp() * (1.0 / k + jump * (t / k + 1.0 / (k * k)))
    } else {
        if k + beta <= 0.0 {
            return Ok(f64::INFINITY);
        }
        let b = jump / beta;
        (1.0 - b) * (-(k + beta) * t).exp() / (k + beta) + b * (-k * t).exp() / k
    };
    Ok(scale * integral)
}

/// `E[int_T^inf f_t Y_t dt] = a y e^{-rho T} / rho`, `rho = r + eta(1+gamma)`.
pub fn income_tail(params: &MarketParams, deflator: &DeflatorSpec, t: f64) -> f64 {
    let rho = deflator.income_decay(params);
    params.a * deflator.y * (-rho * t).exp() / rho
}

/// Dual objective `E[int V(Y_t zeta_t) d kappa_t + int f_t Y_t dt]`.
pub fn estimate_dual(
    ens: &PathEnsemble,
    deflator: &DeflatorSpec,
    measure: &DiscountMeasure,
    params: &MarketParams,
) -> Result<DualEstimate> {
    deflator.validate()?;
    let m = horizon_index(ens, measure)?;
    let n = ens.n_steps();
    let dt = ens.config().dt;
    let util = PowerUtility::new(params.p);
    let income_end = if measure.atom().is_some() { m } else { n };
    let stats = ens.moments(1, |path, out| {
        let mut acc = 0.0;
        for j in 0..=m {
            let t = ens.time(j);
            let yz = ens.deflator_at(path, j, deflator) * measure.zeta(t);
            acc += weight(j, m, dt) * measure.density(t) * util.conjugate(yz);
        }
        if measure.atom().is_some() {
            acc += util.conjugate(ens.deflator_at(path, m, deflator) * measure.zeta(ens.time(m)));
        }
        for j in 0..=income_end {
            let t = ens.time(j);
            acc += weight(j, income_end, dt)
                * income_rate(ens, path, j)
                * measure.income_cutoff(t)
                * ens.deflator_at(path, j, deflator);
        }
        out[0] = acc;
    });
    let t_max = ens.config().t_max;
    let tail = match measure.variant {
        HorizonVariant::InfiniteHorizon => {
            conjugate_tail(params, deflator, t_max)? + income_tail(params, deflator, t_max)
        }
        HorizonVariant::FiniteConsumption { .. } => income_tail(params, deflator, t_max),
        HorizonVariant::FiniteConsumptionTerminalWealth { .. } => 0.0,
    };
    let mc = stats[0].estimate();
    Ok(DualEstimate {
        value: Estimate {
            mean: mc.mean + tail,
            ..mc
        },
        tail,
    })
}

/// Infinite-horizon dual objective for every `(gamma, y)` pair from one pass
/// over the ensemble; `out[g][k]` is the estimate at `gammas[g]`, `ys[k]`.
///
/// Uses `V(y w) = y^q V(w)`, so each path is integrated once per `gamma`.
pub fn estimate_dual_surface(
    ens: &PathEnsemble,
    gammas: &[f64],
    ys: &[f64],
    params: &MarketParams,
) -> Result<Vec<Vec<DualEstimate>>> {
    let unit: Vec<DeflatorSpec> = gammas
        .iter()
        .map(|&g| DeflatorSpec::new(g, 1.0))
        .collect::<Result<_>>()?;
    for &y in ys {
        DeflatorSpec::new(0.0, y)?;
    }
    let q = params.derive_constants()?.q;
    let util = PowerUtility::new(params.p);
    let n = ens.n_steps();
    let dt = ens.config().dt;
    let delta = params.delta;
    let (ng, ny) = (gammas.len(), ys.len());
    let stats = ens.moments(ng * ny, |path, out| {
        for (g, d) in unit.iter().enumerate() {
            let (mut conj, mut income) = (0.0, 0.0);
            for j in 0..=n {
                let t = ens.time(j);
                let y1 = ens.deflator_at(path, j, d);
                let w = weight(j, n, dt);
                conj += w * (-delta * t).exp() * util.conjugate(y1 * (delta * t).exp());
                income += w * income_rate(ens, path, j) * y1;
            }
            for (k, &y) in ys.iter().enumerate() {
                out[g * ny + k] = y.powf(q) * conj + y * income;
            }
        }
    });
    let t_max = ens.config().t_max;
    let mut surface = Vec::with_capacity(ng);
    for (g, &gamma) in gammas.iter().enumerate() {
        let mut row = Vec::with_capacity(ny);
        for (k, &y) in ys.iter().enumerate() {
            let d = DeflatorSpec { gamma, y };
            let tail = conjugate_tail(params, &d, t_max)? + income_tail(params, &d, t_max);
            let mc = stats[g * ny + k].estimate();
            row.push(DualEstimate {
                value: Estimate {
                    mean: mc.mean + tail,
                    ..mc
                },
                tail,
            });
        }
        surface.push(row);
    }
    Ok(surface)
}

/// Present value of the income stream, `E[int_0^inf f_t Y_t dt]`.
pub fn estimate_income_value(ens: &PathEnsemble, deflator: &DeflatorSpec) -> Result<DualEstimate> {
    deflator.validate()?;
    let n = ens.n_steps();
    let dt = ens.config().dt;
    let stats = ens.moments(1, |path, out| {
        out[0] = (0..=n)
            .map(|j| {
                weight(j, n, dt) * income_rate(ens, path, j) * ens.deflator_at(path, j, deflator)
            })
            .sum();
    });
    let tail = income_tail(ens.params(), deflator, ens.config().t_max);
    let mc = stats[0].estimate();
    Ok(DualEstimate {
        value: Estimate {
            mean: mc.mean + tail,
            ..mc
        },
        tail,
    })
}

/// Deflated net consumption `E[int (c_t - f_t) Y_t dt]`.
pub fn estimate_budget(ens: &PathEnsemble, deflator: &DeflatorSpec) -> Result<BudgetEstimate> {
    deflator.validate()?;
    let n = ens.n_steps();
    let dt = ens.config().dt;
    let stats = ens.moments(2, |path, out| {
        let flow: f64 = (0..=n)
            .map(|j| {
                weight(j, n, dt)
                    * (path.consumption[j] - income_rate(ens, path, j))
                    * ens.deflator_at(path, j, deflator)
            })
            .sum();
        out[0] = flow;
        out[1] = flow + path.wealth[n] * ens.deflator_at(path, n, deflator);
    });
    let tail = income_tail(ens.params(), deflator, ens.config().t_max);
    let flow = stats[0].estimate();
    Ok(BudgetEstimate {
        flow: Estimate {
            mean: flow.mean - tail,
            ..flow
        },
        saturated: stats[1].estimate(),
    })
}

/// Time curves of `E[X_t Y_t]` and
/// `E[Lambda_t] = E[X_t Y_t + int_0^t (c_s - f_s) Y_s ds]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeflatedCurves {
    pub times: Vec<f64>,
    pub xy: Vec<Estimate>,
    pub lambda: Vec<Estimate>,
}

impl DeflatedCurves {
    /// Columns `t,mean_XY,se_XY,mean_Lambda,se_Lambda`, one row per time node.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,mean_XY,se_XY,mean_Lambda,se_Lambda")?;
        for ((t, xy), lam) in self.times.iter().zip(&self.xy).zip(&self.lambda) {
            writeln!(out, "{},{},{},{},{}", t, xy.mean, xy.se, lam.mean, lam.se)?;
        }
        Ok(())
    }
}

/// Per-path `(X_j Y_j, Lambda_j)` at every node.
fn deflated_path(
    ens: &PathEnsemble,
    deflator: &DeflatorSpec,
    path: &Path,
    xy: &mut [f64],
    lambda: &mut [f64],
) {
    let dt = ens.config().dt;
    let mut integral = 0.0;
    let mut prev = 0.0;
    for j in 0..xy.len() {
        let y = ens.deflator_at(path, j, deflator);
        let net = (path.consumption[j] - income_rate(ens, path, j)) * y;
        if j > 0 {
            integral += 0.5 * dt * (prev + net);
        }
        prev = net;
        xy[j] = path.wealth[j] * y;
        lambda[j] = xy[j] + integral;
    }
}

pub fn deflated_wealth_curves(
    ens: &PathEnsemble,
    deflator: &DeflatorSpec,
) -> Result<DeflatedCurves> {
    deflator.validate()?;
    let len = ens.n_steps() + 1;
    let stats = ens.moments(2 * len, |path, out| {
        let (xy, lambda) = out.split_at_mut(len);
        deflated_path(ens, deflator, path, xy, lambda);
    });
    Ok(DeflatedCurves {
        times: ens.times(),
        xy: stats[..len].iter().map(|m| m.estimate()).collect(),
        lambda: stats[len..].iter().map(|m| m.estimate()).collect(),
    })
}

/// Per-sample increments `Lambda_{t_{k+1}} - Lambda_{t_k}` between consecutive
/// node indices in `nodes`, and the levels `Lambda_{t_k} - x y`.
pub fn lambda_increments(
    ens: &PathEnsemble,
    deflator: &DeflatorSpec,
    nodes: &[usize],
) -> Result<(Vec<Estimate>, Vec<Estimate>)> {
    deflator.validate()?;
    if nodes.windows(2).any(|w| w[1] <= w[0]) || nodes.last().is_some_and(|&j| j > ens.n_steps()) {
        return Err(Error::Config(
            "report nodes must increase within the time grid".into(),
        ));
    }
    let len = ens.n_steps() + 1;
    let k = nodes.len();
    let xy0 = ens.x0() * deflator.y;
    let stats = ens.moments(2 * k, |path, out| {
        let mut xy = vec![0.0; len];
        let mut lambda = vec![0.0; len];
        deflated_path(ens, deflator, path, &mut xy, &mut lambda);
        for (i, &j) in nodes.iter().enumerate() {
            out[k + i] = lambda[j] - xy0;
            if i + 1 < k {
                out[i] = lambda[nodes[i + 1]] - lambda[j];
            }
        }
    });
    Ok((
        stats[..k - 1].iter().map(|m| m.estimate()).collect(),
        stats[k..].iter().map(|m| m.estimate()).collect(),
    ))
}
