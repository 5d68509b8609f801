//! Criterion benchmarks for the `jumpcal` engine and reference pricers.
//! Run with `cargo bench -p jumpcal-bench`.
