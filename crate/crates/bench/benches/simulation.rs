use std::sync::Arc;

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use tidual_core::{
    estimate_dual, extract_feedback, simulate_ensemble, solve_hjb, ControlSpec, DeflatorSpec,
    DiscountMeasure, MarketParams, PathConfig, WealthGrid,
};

fn ensemble(c: &mut Criterion) {
    let p = MarketParams::default();
    let sol = solve_hjb(&p, &WealthGrid::new(20.0, 4001).unwrap()).unwrap();
    let policy = Arc::new(extract_feedback(&sol, &p).unwrap());
    let cfg = PathConfig::default().with_paths(2000);
    let d = DeflatorSpec::new(0.5, sol.marginal_at(1.0).unwrap()).unwrap();

    let mut group = c.benchmark_group("ensemble_2000x2500");
    group.sample_size(10);
    group.bench_function("regime_switch_terminal_wealth", |b| {
        b.iter(|| {
            let ens = simulate_ensemble(
                1.0,
                ControlSpec::RegimeSwitch {
                    pre: policy.clone(),
                },
                d,
                &p,
                black_box(&cfg),
            )
            .unwrap();
            let j = ens.n_steps();
            ens.moments(1, |path, out| out[0] = path.wealth[j])
        })
    });
    group.bench_function("dual_estimate", |b| {
        b.iter(|| {
            let ens = simulate_ensemble(1.0, ControlSpec::MertonNoIncome, d, &p, black_box(&cfg))
                .unwrap();
            estimate_dual(&ens, &d, &DiscountMeasure::infinite(p.delta), &p).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, ensemble);
criterion_main!(benches);
