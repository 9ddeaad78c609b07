//! Criterion benchmarks for `edgereg`; see `benches/sampler.rs`.
