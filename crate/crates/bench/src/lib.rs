//! Criterion benchmarks for the relbelief pipeline live in `benches/`.
