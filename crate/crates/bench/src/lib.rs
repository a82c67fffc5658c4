//! Criterion benchmarks of the assembly and solver kernels; see `benches/`.
