//! Criterion benchmarks for pesim-core live in `benches/`.
