//! Criterion benchmarks for the dpower kernels live in `benches/`.
