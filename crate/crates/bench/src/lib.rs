//! Criterion benchmarks for the `imicnn-core` kernels; see `benches/kernels.rs`.
