//! Criterion benchmarks for the counting, bracketing, skeleton and
//! finite-difference kernels. See `benches/kernels.rs`.

pub use roompass_core as core;
