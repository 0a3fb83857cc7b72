//! Benchmark-only crate: see `benches/core_ops.rs` for the measured
//! operations. The library target exists solely to anchor the bench
//! target in the workspace.
