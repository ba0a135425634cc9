//! Criterion benchmarks for the evostoch hot paths; see `benches/`.
