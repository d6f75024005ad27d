//! Shared fixtures for the benchmarks.

use steincert_core::quadrature::geometric_grid;
use steincert_core::rng::DEFAULT_SEED;
use steincert_core::transport::EmpiricalMeasure;
use steincert_core::BoundConfig;

/// Evenly spread points with a deterministic jitter, `n` rows of `dim`.
pub fn jittered_cloud(n: usize, dim: usize, shift: f64) -> EmpiricalMeasure {
    let pts = (0..n * dim)
        .map(|i| {
            let u = (i as f64 * 0.618_033_988_749_895).fract();
            shift + 4.0 * u - 2.0
        })
        .collect();
    EmpiricalMeasure::uniform(dim, pts).expect("valid cloud")
}

/// A small bound configuration: `nodes` grid points, `n_outer` outer draws.
pub fn small_bound_config(s: f64, nodes: usize, n_outer: usize) -> BoundConfig {
    BoundConfig {
        s,
        t_grid: geometric_grid(1e-4, 20.0, nodes).expect("valid grid"),
        k_max: 6,
        n_outer,
        replicates: 4,
        seed: DEFAULT_SEED,
        tail_limit: 0.1,
    }
}
