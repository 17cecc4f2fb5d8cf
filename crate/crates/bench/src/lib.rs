//! Criterion benchmarks for the construction, verification, maximal function
//! and sparsity routines; see `benches/core.rs`.
