//! Criterion benchmarks for `phdae-core`; see `benches/`.
