//! Criterion benchmarks for `csnt-core`; see `benches/`.
