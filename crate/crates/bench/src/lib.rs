//! Criterion benchmarks for the closed forms and the session simulator.
//! Run with `cargo bench -p bb84-attacks-bench`.
