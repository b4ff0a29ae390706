//! Benchmark support crate; see `benches/locate.rs`.
