//! Criterion benchmarks for `posflow-core`. See `benches/solvers.rs`.
