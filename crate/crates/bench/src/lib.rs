//! Criterion benchmarks for the solver operators live in `benches/`.
