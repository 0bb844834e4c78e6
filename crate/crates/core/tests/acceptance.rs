//! Acceptance criteria, one test each. Every test prints a single
//! `criterion N ... PASS|FAIL` line before asserting.
//!
//! Tests take a shared lock so the runtime limits are measured without
//! other criteria competing for the CPU.

use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant};

use tidual_core::hjb::FeedbackPolicy;
use tidual_core::model::{merton_marginal, merton_value, perpetual_value};
use tidual_core::sim::{ControlSpec, DeflatorSpec, PathConfig};
use tidual_core::verify::*;
use tidual_core::{extract_feedback, solve_hjb, MarketParams, ValueSolution, WealthGrid};

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(n: u32, what: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {n:>2} {what}: {verdict} ({detail})");
}

fn base() -> MarketParams {
    MarketParams::default()
}

fn grid() -> WealthGrid {
    WealthGrid::new(20.0, 4001).unwrap()
}

fn solved() -> (ValueSolution, FeedbackPolicy) {
    let p = base();
    let sol = solve_hjb(&p, &grid()).unwrap();
    let policy = extract_feedback(&sol, &p).unwrap();
    (sol, policy)
}

fn max_relative_error(sol: &ValueSolution, exact: impl Fn(f64) -> f64) -> f64 {
    sol.grid
        .nodes()
        .iter()
        .zip(&sol.u1)
        .filter(|(&x, _)| x > 0.0)
        .map(|(&x, &u)| ((u - exact(x)) / exact(x)).abs())
        .fold(0.0, f64::max)
}

fn checks_pass(checks: &[CheckResult]) -> bool {
    checks.iter().all(|c| c.pass)
}

fn failing(checks: &[CheckResult]) -> String {
    let names: Vec<String> = checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!("{}: {:.4e} > {:.4e}", c.name, c.statistic, c.threshold))
        .collect();
    if names.is_empty() {
        format!("{} checks", checks.len())
    } else {
        names.join("; ")
    }
}

#[test]
fn criterion_01_merton_reduction() {
    let _g = serial();
    let p = base().with_a(0.0);
    let start = Instant::now();
    let sol = solve_hjb(&p, &grid()).unwrap();
    let elapsed = start.elapsed();
    let err = max_relative_error(&sol, |x| merton_value(x, &p).unwrap());
    let pass = err < 1e-6 && elapsed < Duration::from_secs(5);
    report(
        1,
        "merton reduction",
        pass,
        format!("max rel err {err:.3e} < 1e-6, {elapsed:.2?} < 5s"),
    );
    assert!(pass);
}

#[test]
fn criterion_02_perpetual_reduction() {
    let _g = serial();
    let p = base().with_eta(0.0);
    let start = Instant::now();
    let sol = solve_hjb(&p, &grid()).unwrap();
    let elapsed = start.elapsed();
    let err = max_relative_error(&sol, |x| perpetual_value(x, &p).unwrap());
    let pass = err < 1e-6 && elapsed < Duration::from_secs(5);
    report(
        2,
        "perpetual reduction",
        pass,
        format!("max rel err {err:.3e} < 1e-6, {elapsed:.2?} < 5s"),
    );
    assert!(pass);
}

#[test]
fn criterion_03_bound_sandwich() {
    let _g = serial();
    let (sol, _) = solved();
    let c = check_sandwich(&sol).unwrap();
    report(
        3,
        "bound sandwich",
        c.pass,
        format!("max violation {:.3e} <= 0", c.statistic),
    );
    assert!(c.pass);
}

#[test]
fn criterion_04_finite_marginal_at_zero() {
    let _g = serial();
    let (sol, policy) = solved();
    let flags = check_finite_marginal_at_zero(&sol, &policy);
    let a_values = [0.05, 0.1, 0.2, 0.4];
    let table = sweep_sensitivity(&base(), &a_values, &[0.1], &grid()).unwrap();
    let rising = table.consumption_increasing_in_a(0);
    let pass = checks_pass(&flags) && rising;
    let c1: Vec<String> = table.c1_0.iter().map(|r| format!("{:.5}", r[0])).collect();
    report(
        4,
        "finite marginal utility at zero",
        pass,
        format!(
            "y* = {:.6}, c1(0) = {:.6}, c1(0) over a = [{}]",
            sol.y_star,
            policy.c_at_zero(),
            c1.join(", ")
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_05_grid_convergence() {
    let _g = serial();
    let p = base();
    let start = Instant::now();
    let mut g = grid();
    let mut prev = solve_hjb(&p, &g).unwrap();
    let mut diffs = Vec::new();
    for _ in 0..3 {
        g = g.refined();
        let next = solve_hjb(&p, &g).unwrap();
        diffs.push(prev.max_difference_on_shared_nodes(&next));
        prev = next;
    }
    let elapsed = start.elapsed();
    let floor = 1e-9;
    let ordered = diffs.windows(2).all(|w| w[1] < floor || w[0] / w[1] >= 8.0);
    let pass = ordered && diffs[0].is_finite() && elapsed < Duration::from_secs(30);
    let shown: Vec<String> = diffs.iter().map(|d| format!("{d:.3e}")).collect();
    report(
        5,
        "grid convergence",
        pass,
        format!(
            "diffs [{}], >= 8x per halving or < 1e-9, {elapsed:.2?} < 30s",
            shown.join(", ")
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_06_primal_consistency() {
    let _g = serial();
    let (sol, policy) = solved();
    let start = Instant::now();
    let checks =
        check_primal_consistency(&sol, &policy, 1.0, &base(), &PathConfig::default()).unwrap();
    let elapsed = start.elapsed();
    let c = &checks[0];
    let pass = c.pass && elapsed < Duration::from_secs(120);
    report(
        6,
        "primal monte carlo consistency",
        pass,
        format!(
            "{}; distance {:.4e} <= {:.4e}; absorbed {:.4}; {elapsed:.2?} < 120s",
            c.note, c.statistic, c.threshold, checks[1].statistic
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_07_deflator_normalization() {
    let _g = serial();
    let checks = check_normalization(
        &base(),
        &PathConfig::default(),
        &[0.0, 0.5, 2.0],
        &[1.0, 5.0, 12.5],
    )
    .unwrap();
    let pass = checks_pass(&checks);
    report(7, "deflator normalization", pass, failing(&checks));
    assert!(pass);
}

#[test]
fn criterion_08_budget_constraint() {
    let _g = serial();
    let (sol, policy) = solved();
    let p = base();
    let cfg = PathConfig::default();
    let x = 1.0;
    let y = sol.marginal_at(x).unwrap();
    let controls = [
        ControlSpec::ConstantConsumption(0.0),
        ControlSpec::IncomePlusInterest,
        ControlSpec::MertonNoIncome,
        ControlSpec::RegimeSwitch {
            pre: std::sync::Arc::new(policy),
        },
    ];
    let mut checks = Vec::new();
    for control in &controls {
        for gamma in [0.0, 0.5, 2.0] {
            let d = DeflatorSpec::new(gamma, y).unwrap();
            checks.push(check_budget_constraint(x, control.clone(), d, &p, &cfg).unwrap());
        }
    }
    let income = check_income_value(&p, &cfg).unwrap();
    let pass = checks_pass(&checks) && income.pass;
    report(
        8,
        "budget constraint",
        pass,
        format!("{}; income value {}", failing(&checks), income.note),
    );
    assert!(pass);
}

#[test]
fn criterion_09_weak_duality() {
    let _g = serial();
    let (sol, _) = solved();
    let p = base();
    let cfg = PathConfig::default();
    let xs = [0.5, 1.0, 2.0, 5.0];
    let ys: Vec<f64> = xs.iter().map(|&x| sol.marginal_at(x).unwrap()).collect();
    let out = check_weak_duality(&sol, &[0.0, 0.5, 2.0], &ys, &xs, &p, &cfg).unwrap();
    let zero = check_zero_income_gap(1.0, &p, &cfg).unwrap();
    let pass = out.check.pass && zero.pass;
    let gaps: Vec<String> = out
        .gaps
        .iter()
        .map(|g| format!("{}: {:.4}", g.x, g.gap))
        .collect();
    report(
        9,
        "weak duality",
        pass,
        format!(
            "max excess {:.4e} <= 0; a=0 gap {:.4e} <= {:.4e}; reported gaps [{}]",
            out.check.statistic,
            zero.statistic,
            zero.threshold,
            gaps.join(", ")
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_supermartingale_and_potential() {
    let _g = serial();
    let (sol, policy) = solved();
    let p = base();
    let cfg = PathConfig::default();
    let x = 1.0;
    let y = sol.marginal_at(x).unwrap();
    let shared = std::sync::Arc::new(policy.clone());
    let mut hard = Vec::new();
    for gamma in [0.0, 0.5, 2.0] {
        let d = DeflatorSpec::new(gamma, y).unwrap();
        let control = ControlSpec::RegimeSwitch {
            pre: shared.clone(),
        };
        hard.extend(
            check_supermartingale(
                &format!("regime_switch.gamma_{gamma}"),
                x,
                control,
                d,
                &p,
                &cfg,
                1.0,
            )
            .unwrap(),
        );
    }
    let p0 = p.with_a(0.0);
    let d0 = DeflatorSpec::new(0.0, merton_marginal(x, &p0).unwrap()).unwrap();
    hard.extend(
        check_supermartingale(
            "merton_no_income",
            x,
            ControlSpec::MertonNoIncome,
            d0,
            &p0,
            &cfg,
            1.0,
        )
        .unwrap(),
    );
    let wasteful = DeflatorSpec::new(0.0, y).unwrap();
    hard.extend(
        check_supermartingale(
            "wasteful",
            x,
            ControlSpec::ConstantConsumption(1.0),
            wasteful,
            &p,
            &cfg,
            1.0,
        )
        .unwrap(),
    );
    let martingale = check_martingale(x, &p, &cfg, 1.0).unwrap();
    let potential = check_potential(
        &policy,
        x,
        DeflatorSpec::new(0.0, y).unwrap(),
        &p,
        &cfg,
        1.0,
    )
    .unwrap();
    let pass = checks_pass(&hard) && martingale.pass;
    report(
        10,
        "supermartingale and potential",
        pass,
        format!(
            "supermartingale {}; martingale {} ({:.4e} <= 0); E[XY]_T/xy = {:.4} vs 0.05 (reported)",
            failing(&hard),
            martingale.note,
            martingale.statistic,
            potential[0].statistic
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_11_derivative_formula() {
    let _g = serial();
    let (sol, policy) = solved();
    let c = check_derivative_formula(&sol, &policy, 1.0, &base(), &PathConfig::default()).unwrap();
    report(
        11,
        "derivative formula",
        c.pass,
        format!(
            "{}; distance {:.4e} <= {:.4e}",
            c.note, c.statistic, c.threshold
        ),
    );
    assert!(c.pass);
}

#[test]
fn criterion_12_conjugacy_round_trip() {
    let _g = serial();
    let (sol, _) = solved();
    let checks = check_conjugacy(&sol, 400).unwrap();
    let pass = checks_pass(&checks);
    let shown: Vec<String> = checks
        .iter()
        .map(|c| format!("{} {:.3e} <= {:.3e}", c.name, c.statistic, c.threshold))
        .collect();
    report(12, "conjugacy round trip", pass, shown.join("; "));
    assert!(pass);
}

#[test]
fn criterion_13_sensitivity() {
    let _g = serial();
    let start = Instant::now();
    let a_values = [0.05, 0.1, 0.2, 0.4];
    let eta_values = [0.05, 0.1, 0.2, 0.5];
    let by_a = sweep_sensitivity(&base(), &a_values, &[0.1], &grid()).unwrap();
    let by_eta = sweep_sensitivity(&base(), &[0.2], &eta_values, &grid()).unwrap();
    let elapsed = start.elapsed();
    let pass =
        by_a.increasing_in_a(0) && by_eta.decreasing_in_eta(0) && elapsed < Duration::from_secs(60);
    let fmt = |v: Vec<f64>| {
        v.iter()
            .map(|u| format!("{u:.4}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    report(
        13,
        "sensitivity",
        pass,
        format!(
            "u1(0) over a [{}], over eta [{}], {elapsed:.2?} < 60s",
            fmt(by_a.u1_0.iter().map(|r| r[0]).collect()),
            fmt(by_eta.u1_0[0].clone())
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_14_strong_convergence() {
    let _g = serial();
    let cfg = PathConfig::default().with_paths(4000);
    let c = check_strong_convergence(&base(), &cfg).unwrap();
    report(14, "strong convergence", c.pass, c.note.clone());
    assert!(c.pass);
}
