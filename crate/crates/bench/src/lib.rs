//! Benchmark-only crate; see `benches/crypto.rs`.
