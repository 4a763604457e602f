//! Benchmarks for the q4lab kernels live in `benches/`.
