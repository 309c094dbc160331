//! Criterion benchmarks for odeq; see `benches/invariants.rs`.
