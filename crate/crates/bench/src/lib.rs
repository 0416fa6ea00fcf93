//! Criterion benchmarks for `qmeas-core`; the targets live in `benches/`.
