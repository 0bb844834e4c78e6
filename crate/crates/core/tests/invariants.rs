use proptest::prelude::*;

use tidual_core::model::{merton_marginal, merton_value, perpetual_value};
use tidual_core::sim::{simulate_window, ControlSpec, DeflatorSpec, PathConfig};
use tidual_core::stats::{merge_pairwise, Moments};
use tidual_core::verify::{fingerprint, CheckResult, DualityReport, Severity};
use tidual_core::{
    conjugate_transform, solve_hjb, ConjugateTransform, MarketParams, PowerUtility, WealthGrid,
};

fn market(a: f64, eta: f64) -> MarketParams {
    MarketParams::default().with_a(a).with_eta(eta)
}

fn small_grid() -> WealthGrid {
    WealthGrid::new(20.0, 401).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn merton_value_is_homogeneous(x in 0.01f64..50.0, k in 0.1f64..10.0) {
        let p = MarketParams::default();
        let lhs = merton_value(k * x, &p).unwrap();
        let rhs = k.powf(p.p) * merton_value(x, &p).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12 * rhs);
        prop_assert!((merton_marginal(x, &p).unwrap() * x - p.p * merton_value(x, &p).unwrap()).abs() < 1e-12 * x.max(1.0));
    }

    #[test]
    fn fenchel_inequality(x in 0.001f64..100.0, y in 0.001f64..100.0, p in 0.1f64..0.9) {
        let u = PowerUtility::new(p);
        prop_assert!(u.conjugate(y) >= u.value(x) - x * y - 1e-12 * (1.0 + u.value(x).abs() + x * y));
        let xi = u.inverse_marginal(y);
        prop_assert!((u.conjugate(y) - (u.value(xi) - xi * y)).abs() < 1e-9 * (1.0 + u.conjugate(y).abs()));
    }

    #[test]
    fn solution_is_sandwiched_increasing_and_concave(a in 0.01f64..0.5, eta in 0.02f64..1.0) {
        let p = market(a, eta);
        let sol = solve_hjb(&p, &small_grid()).unwrap();
        prop_assert!(sol.sandwich_violation().is_none());
        for (i, &x) in sol.grid.nodes().iter().enumerate() {
            prop_assert!(merton_value(x, &p).unwrap() <= sol.u1[i]);
            prop_assert!(sol.u1[i] <= perpetual_value(x, &p).unwrap());
            prop_assert!(sol.du1[i] > 0.0 && sol.ddu1[i] < 0.0);
        }
        prop_assert!(sol.u1.windows(2).all(|w| w[1] < w[0]));
        prop_assert!(sol.du1.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(sol.y_star.is_finite() && sol.y_star > 0.0);
    }

    #[test]
    fn more_income_raises_value_at_zero(a in 0.02f64..0.4, bump in 0.01f64..0.2, eta in 0.05f64..0.5) {
        let g = small_grid();
        let lo = solve_hjb(&market(a, eta), &g).unwrap().u_at_zero();
        let hi = solve_hjb(&market(a + bump, eta), &g).unwrap().u_at_zero();
        prop_assert!(hi > lo);
    }

    #[test]
    fn discrete_conjugate_is_decreasing_and_convex(a in 0.05f64..0.4, eta in 0.05f64..0.5) {
        let sol = solve_hjb(&market(a, eta), &small_grid()).unwrap();
        let ys = ConjugateTransform::uniform_y_grid(&sol, 100);
        let ct = conjugate_transform(&sol, &ys).unwrap();
        prop_assert!(ct.is_nonincreasing());
        prop_assert!(ct.is_convex(1e-9));
        for (i, &x) in sol.grid.nodes().iter().enumerate() {
            for (k, &y) in ct.y.iter().enumerate() {
                prop_assert!(ct.v[k] >= sol.u1[i] - x * y - 1e-12);
            }
        }
    }

    #[test]
    fn jump_deflator_positive_and_piecewise(gamma in -0.99f64..5.0, t in 0.0f64..30.0, tau in 0.0f64..30.0) {
        let d = DeflatorSpec::new(gamma, 1.0).unwrap();
        let g = d.jump_factor(t, tau, 0.1);
        prop_assert!(g > 0.0);
        let expected = (-0.1 * gamma * t.min(tau)).exp() * if t >= tau { 1.0 + gamma } else { 1.0 };
        prop_assert!((g - expected).abs() <= 1e-14 * expected);
    }

    #[test]
    fn pairwise_merge_matches_sequential(xs in prop::collection::vec(-1e3f64..1e3, 1..200), split in 1usize..16) {
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let parts: Vec<Moments> = xs
            .chunks(split)
            .map(|c| {
                let mut m = Moments::default();
                c.iter().for_each(|&x| m.push(x));
                m
            })
            .collect();
        let merged = merge_pairwise(&parts);
        prop_assert_eq!(merged.n, whole.n);
        prop_assert!((merged.mean - whole.mean).abs() < 1e-9 * (1.0 + whole.mean.abs()));
        prop_assert!((merged.variance() - whole.variance()).abs() < 1e-7 * (1.0 + whole.variance()));
    }

    #[test]
    fn check_passes_iff_within_threshold(stat in -10.0f64..10.0, thr in -10.0f64..10.0) {
        let c = CheckResult::new("c", "r", Severity::Hard, stat, 0.0, thr);
        prop_assert_eq!(c.pass, stat <= thr);
        let mut r = DualityReport::default();
        r.push(c);
        prop_assert_eq!(r.all_hard_pass(), stat <= thr);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn wealth_stays_nonnegative_while_income_can_stop(
        seed in any::<u64>(),
        c in 0.0f64..2.0,
        x0 in 0.0f64..3.0,
    ) {
        let p = MarketParams::default();
        let cfg = PathConfig::default().with_t_max(5.0).with_paths(8).with_seed(seed);
        for control in [ControlSpec::ConstantConsumption(c), ControlSpec::MertonNoIncome, ControlSpec::IncomePlusInterest] {
            let ens = simulate_window(x0, control, DeflatorSpec::new(0.0, 1.0).unwrap(), &p, &cfg).unwrap();
            for i in 0..ens.n_paths() {
                let path = ens.path(i);
                prop_assert!(path.wealth.iter().all(|&x| x >= 0.0));
                prop_assert!(path.bs_deflator.iter().all(|&z| z > 0.0));
            }
        }
    }

    #[test]
    fn fixed_seed_reproduces_paths(seed in any::<u64>()) {
        let p = MarketParams::default();
        let cfg = PathConfig::default().with_t_max(2.0).with_paths(4).with_seed(seed);
        let d = DeflatorSpec::new(0.5, 1.0).unwrap();
        let a = simulate_window(1.0, ControlSpec::MertonNoIncome, d, &p, &cfg).unwrap();
        let b = simulate_window(1.0, ControlSpec::MertonNoIncome, d, &p, &cfg).unwrap();
        for i in 0..4 {
            let (pa, pb) = (a.path(i), b.path(i));
            prop_assert_eq!(pa.wealth, pb.wealth);
            prop_assert_eq!(pa.tau.to_bits(), pb.tau.to_bits());
        }
    }
}

#[test]
fn fingerprint_is_stable_and_sensitive() {
    let a = format!("{:?}", MarketParams::default());
    let b = format!("{:?}", MarketParams::default().with_a(0.3));
    assert_eq!(fingerprint(&a), fingerprint(&a.clone()));
    assert_ne!(fingerprint(&a), fingerprint(&b));
}
