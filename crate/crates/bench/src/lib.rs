//! benchmarks live in `benches/`.
