use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use tidual_core::{
    conjugate_transform, extract_feedback, solve_hjb, ConjugateTransform, MarketParams, WealthGrid,
};

fn solve(c: &mut Criterion) {
    let p = MarketParams::default();
    let mut group = c.benchmark_group("solve_hjb");
    for n in [401, 4001, 16001] {
        let grid = WealthGrid::new(20.0, n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &grid, |b, g| {
            b.iter(|| solve_hjb(black_box(&p), g).unwrap())
        });
    }
    group.finish();
}

fn post_process(c: &mut Criterion) {
    let p = MarketParams::default();
    let sol = solve_hjb(&p, &WealthGrid::new(20.0, 4001).unwrap()).unwrap();
    c.bench_function("extract_feedback/4001", |b| {
        b.iter(|| extract_feedback(black_box(&sol), &p).unwrap())
    });
    let ys = ConjugateTransform::uniform_y_grid(&sol, 400);
    c.bench_function("conjugate_transform/4001x400", |b| {
        b.iter(|| conjugate_transform(black_box(&sol), &ys).unwrap())
    });
}

criterion_group!(benches, solve, post_process);
criterion_main!(benches);
