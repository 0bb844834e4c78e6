use serde::Serialize;

use crate::error::{Error, Result};
use crate::hjb::{conjugate_transform, ConjugateTransform, FeedbackPolicy, ValueSolution};
use crate::model::{
    merton_marginal, merton_value, merton_wealth_closed_form, perpetual_value, DiscountMeasure,
    MarketParams,
};
use crate::sim::{
    deflated_wealth_curves, estimate_budget, estimate_dual_surface, estimate_income_value,
    estimate_marginal_identity, estimate_primal, lambda_increments, simulate_ensemble,
    simulate_window, ControlSpec, DeflatorSpec, PathConfig,
};
use crate::stats::Estimate;
use crate::verify::{CheckResult, Severity};

fn flag(ok: bool) -> f64 {
    if ok {
        0.0
    } else {
        1.0
    }
}

fn check_x(x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "test wealth must be nonnegative, got {x}"
        )))
    }
}

/// Centred difference of `u1` at the grid node `x`.
fn node_slope(sol: &ValueSolution, x: f64) -> Result<f64> {
    let i = sol
        .grid
        .index_of(x)
        .filter(|&i| i > 0 && i + 1 < sol.len())
        .ok_or_else(|| Error::Domain(format!("x = {x} is not an interior grid node")))?;
    Ok((sol.u1[i - 1] - sol.u1[i + 1]) / (2.0 * sol.grid.h()))
}

/// `u0 <= u1 <= u_inf` at every node, no tolerance.
pub fn check_sandwich(sol: &ValueSolution) -> Result<CheckResult> {
    let params = sol.params();
    let mut worst = f64::NEG_INFINITY;
    for (i, &x) in sol.grid.nodes().iter().enumerate() {
        let lo = merton_value(x, params)?;
        let hi = perpetual_value(x, params)?;
        worst = worst.max(lo - sol.u1[i]).max(sol.u1[i] - hi);
    }
    Ok(CheckResult::new(
        "value_sandwich",
        "u0(x) <= u1(x) <= u0(x + a/r) at every node",
        Severity::Hard,
        worst,
        0.0,
        0.0,
    ))
}

/// Finite `u1'(0)` and strictly positive consumption at zero wealth.
pub fn check_finite_marginal_at_zero(
    sol: &ValueSolution,
    policy: &FeedbackPolicy,
) -> Vec<CheckResult> {
    vec![
        CheckResult::new(
            "finite_marginal_at_zero",
            "y* = u1'(0) finite",
            Severity::Tolerance,
            flag(sol.y_star.is_finite() && sol.y_star > 0.0),
            0.0,
            0.0,
        )
        .with_note(format!("y* = {}", sol.y_star)),
        CheckResult::new(
            "consumption_at_zero",
            "c1(0) = I(y*) > 0",
            Severity::Tolerance,
            flag(policy.c_at_zero() > 0.0),
            0.0,
            0.0,
        )
        .with_note(format!("c1(0) = {}", policy.c_at_zero())),
    ]
}

/// `E[int (c - f) Y dt] <= x y + 3 se`, using the upper estimate
/// `E[int_0^T (c - f) Y dt + X_T Y_T]`.
pub fn check_budget_constraint(
    x: f64,
    control: ControlSpec,
    deflator: DeflatorSpec,
    params: &MarketParams,
    cfg: &PathConfig,
) -> Result<CheckResult> {
    check_x(x)?;
    let name = format!("budget.{}.gamma_{}", control.name(), deflator.gamma);
    let ens = simulate_ensemble(x, control, deflator, params, cfg)?;
    let b = estimate_budget(&ens, &deflator)?;
    let xy = x * deflator.y;
    Ok(CheckResult::new(
        name,
        "E[int (c - f) Y dt] <= x y",
        Severity::Tolerance,
        b.saturated.mean - xy,
        b.saturated.se,
        3.0 * b.saturated.se,
    )
    .with_note(format!(
        "xy = {xy}; upper estimate {} +- {}; flow part {} +- {}",
        b.saturated.mean, b.saturated.se, b.flow.mean, b.flow.se
    )))
}

/// Without income the Merton plan spends its whole budget:
/// `E[int c Y dt] = x y` within `3 se`.
pub fn check_budget_saturation(
    x: f64,
    params: &MarketParams,
    cfg: &PathConfig,
) -> Result<CheckResult> {
    check_x(x)?;
    let params = params.with_a(0.0);
    let deflator = DeflatorSpec::new(0.0, merton_marginal(x, &params)?)?;
    let ens = simulate_ensemble(x, ControlSpec::MertonNoIncome, deflator, &params, cfg)?;
    let b = estimate_budget(&ens, &deflator)?;
    let xy = x * deflator.y;
    Ok(CheckResult::new(
        "budget_saturation_no_income",
        "E[int c Y dt] = x y for the no-income Merton plan",
        Severity::Tolerance,
        (b.saturated.mean - xy).abs(),
        b.saturated.se,
        3.0 * b.saturated.se,
    )
    .with_note(format!("estimate {} vs xy = {xy}", b.saturated.mean)))
}

/// `E[int f Y dt] = a / (r + eta)` with `gamma = 0`, `y = 1`.
pub fn check_income_value(params: &MarketParams, cfg: &PathConfig) -> Result<CheckResult> {
    let deflator = DeflatorSpec::new(0.0, 1.0)?;
    let ens = simulate_ensemble(
        1.0,
        ControlSpec::ConstantConsumption(0.0),
        deflator,
        params,
        cfg,
    )?;
    let est = estimate_income_value(&ens, &deflator)?;
    let exact = params.terminating_income_value();
    Ok(CheckResult::new(
        "income_value",
        "E[int a N Z e^{-rt} dt] = a/(r+eta)",
        Severity::Tolerance,
        (est.value.mean - exact).abs(),
        est.value.se,
        3.0 * est.value.se,
    )
    .with_note(format!("estimate {} vs {exact}", est.value.mean)))
}

/// One `(gamma, y)` point of the Monte Carlo dual surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualPoint {
    pub gamma: f64,
    pub y: f64,
    pub value: Estimate,
    pub tail: f64,
}

/// Smallest dual bound found at one wealth level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualityGap {
    pub x: f64,
    pub u1: f64,
    pub gamma: f64,
    pub y: f64,
    /// `min over (gamma, y) of v_gamma(y) + x y`.
    pub dual_bound: f64,
    pub se: f64,
    /// `dual_bound - u1(x)`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakDualityOutcome {
    pub check: CheckResult,
    pub gaps: Vec<DualityGap>,
    pub surface: Vec<DualPoint>,
}

impl WeakDualityOutcome {
    /// Gap statistics as reported-only checks.
    pub fn gap_checks(&self) -> Vec<CheckResult> {
        self.gaps
            .iter()
            .map(|g| {
                CheckResult::new(
                    format!("duality_gap.x_{}", g.x),
                    "min over constant gamma, y of v(y) + x y - u1(x)",
                    Severity::Reported,
                    g.gap,
                    g.se,
                    f64::INFINITY,
                )
                .with_note(format!("attained at gamma = {}, y = {}", g.gamma, g.y))
            })
            .collect()
    }
}

/// `u1(x) <= v_gamma(y) + x y + 3 se` for every tested `(gamma, y, x)`.
///
/// `statistic` is the largest `u1(x) - v_gamma(y) - x y - 3 se`.
pub fn check_weak_duality(
    sol: &ValueSolution,
    gammas: &[f64],
    ys: &[f64],
    xs: &[f64],
    params: &MarketParams,
    cfg: &PathConfig,
) -> Result<WeakDualityOutcome> {
    if ys.is_empty() || gammas.is_empty() || xs.is_empty() {
        return Err(Error::EmptyRange(
            "weak duality needs gammas, ys and xs".into(),
        ));
    }
    if let Some(&bad) = ys.iter().find(|&&y| !(y > 0.0 && y < sol.y_star)) {
        return Err(Error::EmptyRange(format!(
            "y = {bad} outside (0, y* = {})",
            sol.y_star
        )));
    }
    let ens = simulate_ensemble(
        1.0,
        ControlSpec::MertonNoIncome,
        DeflatorSpec::new(gammas[0], ys[0])?,
        params,
        cfg,
    )?;
    let table = estimate_dual_surface(&ens, gammas, ys, params)?;
    let mut surface = Vec::with_capacity(gammas.len() * ys.len());
    for (g, row) in gammas.iter().zip(&table) {
        for (y, est) in ys.iter().zip(row) {
            surface.push(DualPoint {
                gamma: *g,
                y: *y,
                value: est.value,
                tail: est.tail,
            });
        }
    }
    let mut worst = f64::NEG_INFINITY;
    let mut worst_at = (0.0, 0.0, 0.0);
    let mut gaps = Vec::with_capacity(xs.len());
    for &x in xs {
        let u = sol.value_at(x)?;
        let mut best: Option<(f64, &DualPoint)> = None;
        for point in &surface {
            let bound = point.value.mean + x * point.y;
            let excess = u - bound - 3.0 * point.value.se;
            if excess > worst {
                worst = excess;
                worst_at = (point.gamma, point.y, x);
            }
            if best.is_none_or(|(b, _)| bound < b) {
                best = Some((bound, point));
            }
        }
        let (bound, point) = best.expect("nonempty surface");
        gaps.push(DualityGap {
            x,
            u1: u,
            gamma: point.gamma,
            y: point.y,
            dual_bound: bound,
            se: point.value.se,
            gap: bound - u,
        });
    }
    let check = CheckResult::new(
        "weak_duality",
        "u1(x) <= v_gamma(y) + x y + 3 se",
        Severity::Hard,
        worst,
        0.0,
        0.0,
    )
    .with_note(format!(
        "largest excess at gamma = {}, y = {}, x = {}",
        worst_at.0, worst_at.1, worst_at.2
    ));
    Ok(WeakDualityOutcome {
        check,
        gaps,
        surface,
    })
}

/// Without income the dual is attained by the Black-Scholes deflator at
/// `y = u0'(x)`: `|v(y) + x y - u0(x)| <= max(3 se, 1% u0(x))`.
pub fn check_zero_income_gap(
    x: f64,
    params: &MarketParams,
    cfg: &PathConfig,
) -> Result<CheckResult> {
    check_x(x)?;
    let params = params.with_a(0.0);
    let y = merton_marginal(x, &params)?;
    let ens = simulate_ensemble(
        x,
        ControlSpec::MertonNoIncome,
        DeflatorSpec::new(0.0, y)?,
        &params,
        cfg,
    )?;
    let est = estimate_dual_surface(&ens, &[0.0], &[y], &params)?[0][0];
    let u0 = merton_value(x, &params)?;
    let gap = est.value.mean + x * y - u0;
    Ok(CheckResult::new(
        "duality_gap_no_income",
        "v(u0'(x)) + x u0'(x) = u0(x)",
        Severity::Tolerance,
        gap.abs(),
        est.value.se,
        (3.0 * est.value.se).max(0.01 * u0),
    )
    .with_note(format!(
        "dual bound {} vs u0 = {u0}",
        est.value.mean + x * y
    )))
}

/// Round trip of the discrete conjugate and the shape of `v_num` on `(0, y*)`.
pub fn check_conjugacy(sol: &ValueSolution, y_points: usize) -> Result<Vec<CheckResult>> {
    let ys = ConjugateTransform::uniform_y_grid(sol, y_points);
    let ct = conjugate_transform(sol, &ys)?;
    let max_slope = sol
        .du1
        .iter()
        .copied()
        .filter(|d| d.is_finite())
        .fold(0.0, f64::max);
    let scale = sol.grid.h() + ct.dy();
    let rise =
        ct.v.windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max);
    let bend =
        ct.y.windows(3)
            .zip(ct.v.windows(3))
            .map(|(y, v)| {
                let left = (v[1] - v[0]) / (y[1] - y[0]);
                let right = (v[2] - v[1]) / (y[2] - y[1]);
                (left - right) / (1.0 + left.abs() + right.abs())
            })
            .fold(f64::NEG_INFINITY, f64::max);
    Ok(vec![
        CheckResult::new(
            "conjugacy_round_trip",
            "max |u_hat - u1| <= 5 (h + dy) max|u1'|",
            Severity::Tolerance,
            ct.round_trip_error(sol),
            0.0,
            5.0 * scale * max_slope,
        ),
        CheckResult::new(
            "conjugate_decreasing",
            "v_num nonincreasing on (0, y*)",
            Severity::Tolerance,
            rise,
            0.0,
            0.0,
        ),
        CheckResult::new(
            "conjugate_convex",
            "v_num convex on (0, y*)",
            Severity::Tolerance,
            bend,
            0.0,
            1e-9,
        ),
        CheckResult::new(
            "conjugate_slope_at_y_star",
            "|v_num'| -> 0 as y -> y*",
            Severity::Tolerance,
            ct.terminal_slope().abs(),
            0.0,
            5.0 * scale,
        )
        .with_note(format!(
            "last y = {}, y* = {}",
            ct.y[ct.y.len() - 1],
            sol.y_star
        )),
    ])
}

fn regime_switch(policy: &FeedbackPolicy) -> ControlSpec {
    ControlSpec::RegimeSwitch {
        pre: std::sync::Arc::new(policy.clone()),
    }
}

/// Primal Monte Carlo value of the regime-switching policy against `u1(x)`:
/// distance from `u1(x)` to `[mean, mean + tail bound]` within
/// `max(2 se, 2% u1(x))`. Also reports the absorption frequency.
pub fn check_primal_consistency(
    sol: &ValueSolution,
    policy: &FeedbackPolicy,
    x: f64,
    params: &MarketParams,
    cfg: &PathConfig,
) -> Result<Vec<CheckResult>> {
    check_x(x)?;
    let y = sol.marginal_at(x)?;
    let ens = simulate_ensemble(
        x,
        regime_switch(policy),
        DeflatorSpec::new(0.0, y)?,
        params,
        cfg,
    )?;
    let est = estimate_primal(&ens, &DiscountMeasure::infinite(params.delta))?;
    let target = sol.value_at(x)?;
    Ok(vec![
        CheckResult::new(
            "primal_consistency",
            "E[int U(c) d kappa] under the solved policy = u1(x)",
            Severity::Tolerance,
            est.distance_to(target),
            est.value.se,
            (2.0 * est.value.se).max(0.02 * target),
        )
        .with_note(format!(
            "estimate {} +- {} (tail bound {}) vs u1 = {target}",
            est.value.mean, est.value.se, est.tail_bound
        )),
        CheckResult::new(
            "absorption_frequency",
            "fraction of paths absorbed at zero wealth < 0.1%",
            Severity::Tolerance,
            est.absorbed_fraction,
            0.0,
            1e-3,
        ),
    ])
}

/// Primal Monte Carlo value of the no-income Merton plan against `u0(x)`.
pub fn check_merton_primal(x: f64, params: &MarketParams, cfg: &PathConfig) -> Result<CheckResult> {
    check_x(x)?;
    let params = params.with_a(0.0);
    let ens = simulate_ensemble(
        x,
        ControlSpec::MertonNoIncome,
        DeflatorSpec::new(0.0, 1.0)?,
        &params,
        cfg,
    )?;
    let est = estimate_primal(&ens, &DiscountMeasure::infinite(params.delta))?;
    let target = merton_value(x, &params)?;
    Ok(CheckResult::new(
        "primal_consistency_no_income",
        "E[int U(K X) d kappa] = u0(x)",
        Severity::Tolerance,
        est.distance_to(target),
        est.value.se,
        (2.0 * est.value.se).max(0.02 * target),
    )
    .with_note(format!(
        "estimate {} +- {} (tail bound {}) vs u0 = {target}",
        est.value.mean, est.value.se, est.tail_bound
    )))
}

/// `x u1'(x) = E[int U'(c)(c - f) d kappa]` under the solved policy, within
/// `max(3 se, 2% |x u1'(x)|)`; `u1'` from a centred difference on the grid.
pub fn check_derivative_formula(
    sol: &ValueSolution,
    policy: &FeedbackPolicy,
    x: f64,
    params: &MarketParams,
    cfg: &PathConfig,
) -> Result<CheckResult> {
    check_x(x)?;
    let slope = node_slope(sol, x)?;
    let ens = simulate_ensemble(
        x,
        regime_switch(policy),
        DeflatorSpec::new(0.0, slope)?,
        params,
        cfg,
    )?;
    let est = estimate_marginal_identity(&ens, &DiscountMeasure::infinite(params.delta))?;
    let target = x * slope;
    Ok(CheckResult::new(
        "derivative_formula",
        "x u1'(x) = E[int U'(c)(c - f) d kappa]",
        Severity::Tolerance,
        est.distance_to(target),
        est.value.se,
        (3.0 * est.value.se).max(0.02 * target.abs()),
    )
    .with_note(format!(
        "estimate {} +- {} (tail bound {}) vs x u1'(x) = {target}",
        est.value.mean, est.value.se, est.tail_bound
    )))
}

fn report_nodes(cfg: &PathConfig, every: f64) -> Result<Vec<usize>> {
    let stride = (every / cfg.dt).round() as usize;
    if stride == 0 {
        return Err(Error::Config(format!("report spacing {every} below dt")));
    }
    Ok((0..=cfg.n_steps()).step_by(stride).collect())
}

/// Supermartingale property of `Lambda_t = X_t Y_t + int_0^t (c - f) Y ds`:
/// every increment between report times has mean `<= 3 se`; and
/// `E[Lambda_0] = x y` exactly.
pub fn check_supermartingale(
    label: &str,
    x: f64,
    control: ControlSpec,
    deflator: DeflatorSpec,
    params: &MarketParams,
    cfg: &PathConfig,
    every: f64,
) -> Result<Vec<CheckResult>> {
    check_x(x)?;
    let nodes = report_nodes(cfg, every)?;
    let ens = simulate_ensemble(x, control, deflator, params, cfg)?;
    let (inc, lev) = lambda_increments(&ens, &deflator, &nodes)?;
    let (k, worst) = inc.iter().map(|e| e.mean - 3.0 * e.se).enumerate().fold(
        (0, f64::NEG_INFINITY),
        |acc, (k, v)| if v > acc.1 { (k, v) } else { acc },
    );
    Ok(vec![
        CheckResult::new(
            format!("supermartingale.{label}"),
            "E[Lambda_t] nonincreasing within 3 se",
            Severity::Hard,
            worst,
            inc.get(k).map_or(0.0, |e| e.se),
            0.0,
        )
        .with_note(format!(
            "worst step ends at t = {}; E[Lambda_T] - xy = {}",
            ens.time(nodes[k + 1]),
            lev[lev.len() - 1].mean
        )),
        CheckResult::new(
            format!("lambda_initial.{label}"),
            "E[Lambda_0] = x y exactly",
            Severity::Hard,
            lev[0].mean.abs(),
            0.0,
            0.0,
        ),
    ])
}

/// For the no-income Merton optimum `Lambda` is a true martingale:
/// `|E[Lambda_t] - x y| <= 3 se` at every report time.
pub fn check_martingale(
    x: f64,
    params: &MarketParams,
    cfg: &PathConfig,
    every: f64,
) -> Result<CheckResult> {
    check_x(x)?;
    let params = params.with_a(0.0);
    let deflator = DeflatorSpec::new(0.0, merton_marginal(x, &params)?)?;
    let nodes = report_nodes(cfg, every)?;
    let ens = simulate_ensemble(x, ControlSpec::MertonNoIncome, deflator, &params, cfg)?;
    let (_, lev) = lambda_increments(&ens, &deflator, &nodes)?;
    let (k, worst) = lev
        .iter()
        .map(|e| e.mean.abs() - 3.0 * e.se)
        .enumerate()
        .skip(1)
        .fold(
            (0, f64::NEG_INFINITY),
            |acc, (k, v)| if v > acc.1 { (k, v) } else { acc },
        );
    Ok(CheckResult::new(
        "martingale_no_income",
        "E[Lambda_t] = x y within 3 se",
        Severity::Tolerance,
        worst,
        lev[k].se,
        0.0,
    )
    .with_note(format!(
        "worst at t = {}: E[Lambda_t] - xy = {} +- {}",
        ens.time(nodes[k]),
        lev[k].mean,
        lev[k].se
    )))
}

/// Potential property of `X Y` under the solved policy: terminal level
/// below 5% of `x y` and a decreasing trend. Reported only, since a
/// constant `gamma` is not the dual optimiser.
pub fn check_potential(
    policy: &FeedbackPolicy,
    x: f64,
    deflator: DeflatorSpec,
    params: &MarketParams,
    cfg: &PathConfig,
    every: f64,
) -> Result<Vec<CheckResult>> {
    check_x(x)?;
    let nodes = report_nodes(cfg, every)?;
    let ens = simulate_ensemble(x, regime_switch(policy), deflator, params, cfg)?;
    let curves = deflated_wealth_curves(&ens, &deflator)?;
    let xy = x * deflator.y;
    let terminal = curves.xy[curves.xy.len() - 1];
    let rise = nodes
        .windows(2)
        .map(|w| {
            let (a, b) = (curves.xy[w[0]], curves.xy[w[1]]);
            b.mean - a.mean - 3.0 * a.se.max(b.se)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(vec![
        CheckResult::new(
            format!("potential_terminal.gamma_{}", deflator.gamma),
            "E[X_T Y_T] < 5% x y",
            Severity::Reported,
            terminal.mean / xy,
            terminal.se / xy,
            0.05,
        ),
        CheckResult::new(
            format!("potential_trend.gamma_{}", deflator.gamma),
            "E[X_t Y_t] decreasing within 3 se",
            Severity::Reported,
            rise,
            0.0,
            0.0,
        ),
    ])
}

/// `|E[Gamma_t] - 1| <= 3 se` for each `gamma` and `|E[Z_t] - 1| <= 3 se`.
pub fn check_normalization(
    params: &MarketParams,
    cfg: &PathConfig,
    gammas: &[f64],
    times: &[f64],
) -> Result<Vec<CheckResult>> {
    let deflators: Vec<DeflatorSpec> = gammas
        .iter()
        .map(|&g| DeflatorSpec::new(g, 1.0))
        .collect::<Result<_>>()?;
    let ens = simulate_ensemble(1.0, ControlSpec::MertonNoIncome, deflators[0], params, cfg)?;
    let idx: Vec<usize> = times.iter().map(|&t| ens.index_of(t)).collect();
    let per_t = gammas.len() + 1;
    let eta = params.eta;
    let stats = ens.moments(idx.len() * per_t, |path, out| {
        for (i, &j) in idx.iter().enumerate() {
            let t = ens.time(j);
            out[i * per_t] = path.bs_deflator[j];
            for (g, d) in deflators.iter().enumerate() {
                out[i * per_t + 1 + g] = d.jump_factor(t, path.tau, eta);
            }
        }
    });
    let mut checks = Vec::new();
    for (i, &t) in times.iter().enumerate() {
        let z = stats[i * per_t].estimate();
        checks.push(CheckResult::new(
            format!("normalization.bs_deflator.t_{t}"),
            "E[Z_t] = 1",
            Severity::Tolerance,
            (z.mean - 1.0).abs(),
            z.se,
            3.0 * z.se,
        ));
        for (g, gamma) in gammas.iter().enumerate() {
            let m = stats[i * per_t + 1 + g].estimate();
            checks.push(CheckResult::new(
                format!("normalization.jump_deflator.gamma_{gamma}.t_{t}"),
                "E[Gamma_t] = 1",
                Severity::Tolerance,
                (m.mean - 1.0).abs(),
                m.se,
                3.0 * m.se,
            ));
        }
    }
    Ok(checks)
}

/// Empirical `P(tau > t)` against `e^{-eta t}` at `t = 1/eta, 2/eta`.
pub fn check_exponential_clock(
    params: &MarketParams,
    cfg: &PathConfig,
) -> Result<Vec<CheckResult>> {
    if !(params.eta > 0.0) {
        return Ok(Vec::new());
    }
    let ens = simulate_ensemble(
        1.0,
        ControlSpec::MertonNoIncome,
        DeflatorSpec::new(0.0, 1.0)?,
        params,
        cfg,
    )?;
    let times = [1.0 / params.eta, 2.0 / params.eta];
    let stats = ens.moments(2, |path, out| {
        for (o, t) in out.iter_mut().zip(times) {
            *o = if path.tau > t { 1.0 } else { 0.0 };
        }
    });
    let n = ens.n_paths() as f64;
    Ok(times
        .iter()
        .zip(&stats)
        .map(|(&t, m)| {
            let p = (-params.eta * t).exp();
            let se = (p * (1.0 - p) / n).sqrt();
            CheckResult::new(
                format!("termination_clock.t_{t}"),
                "P(tau > t) = e^{-eta t}",
                Severity::Tolerance,
                (m.mean - p).abs(),
                se,
                3.0 * se,
            )
        })
        .collect())
}

/// RMS error of the Euler wealth at `t` against the closed-form
/// perpetual-income optimum driven by the same Brownian path, with income
/// never terminating, relative to the exact `X_t + a/r`.
pub fn strong_error(params: &MarketParams, cfg: &PathConfig, x: f64, t: f64) -> Result<f64> {
    let params = params.with_eta(0.0);
    let ens = simulate_window(
        x,
        ControlSpec::MertonPerpetual,
        DeflatorSpec::new(0.0, 1.0)?,
        &params,
        cfg,
    )?;
    let j = ens.index_of(t);
    let tj = ens.time(j);
    let shift = params.perpetual_income_value();
    let stats = ens.moments(1, |path, out| {
        let exact =
            merton_wealth_closed_form(tj, path.bs_deflator[j], x, &params).unwrap_or(f64::NAN);
        let e = (path.wealth[j] - exact) / (exact + shift);
        out[0] = e * e;
    });
    Ok(stats[0].mean.sqrt())
}

/// Strong order one half: `error(dt) / error(dt/4)` in `[1.6, 2.6]`, read
/// at `t = 1` on a window of length 1.
pub fn check_strong_convergence(params: &MarketParams, cfg: &PathConfig) -> Result<CheckResult> {
    let cfg = &cfg.with_t_max(1.0);
    let coarse = strong_error(params, cfg, 1.0, 1.0)?;
    let fine = strong_error(params, &cfg.with_dt(cfg.dt / 4.0), 1.0, 1.0)?;
    let ratio = coarse / fine;
    Ok(CheckResult::new(
        "strong_convergence",
        "RMS error ratio per 4x dt refinement in [1.6, 2.6]",
        Severity::Tolerance,
        (ratio - 2.1).abs(),
        0.0,
        0.5,
    )
    .with_note(format!(
        "ratio {ratio}: rms {coarse} at dt = {}, {fine} at dt/4",
        cfg.dt
    )))
}
