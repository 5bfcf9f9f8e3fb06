//! Criterion benchmarks for `faslab-core`; see `benches/`.
