//! Shared fixtures for the criterion benchmarks.

use sectorflow::{generate_benchmark, BenchmarkParams, Instance};

/// The default 24-flight benchmark at the given time step.
pub fn benchmark_instance(step: f64) -> Instance {
    generate_benchmark(0, &BenchmarkParams { step, ..BenchmarkParams::default() }).expect("default benchmark is valid")
}
