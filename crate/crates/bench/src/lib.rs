//! Criterion benchmarks for the solver and the Monte Carlo engine live in `benches/`.
