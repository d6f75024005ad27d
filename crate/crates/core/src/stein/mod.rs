//! Bound engines.
//!
//! A bound is an integral over `t` of an integrand `S(t)` assembled from
//! conditional moments `E‖E[Y_k | X_0]‖` of the pair increments
//! `Δ = X_t - X_0`. The moments are estimated by Monte Carlo: `n_outer` draws
//! of `X_0`, each with `R` conditional replicates of `X_t`.

mod diffusion;
mod estimator;
mod gaussian;
mod report;
mod samplers;

pub use diffusion::{
    curvature_constant, curvature_weight_fk, general_w2_bound, markov_chain_w2_bound, DiffusionApproxReport,
    DiffusionSpec, EulerKernel, KernelMoments,
};
pub use estimator::{conditional_moment_sq, conditional_terms, Centering, Estimate, WeightMode};
pub use gaussian::{gauss_w2_bound, gauss_w2_nodes, wp_gauss_1d_bound, wp_gauss_exch_bound};
pub use report::{BoundReport, NodeTerms};
pub use samplers::{IndependentGaussianPair, MarkovStepPair, OrnsteinUhlenbeckPair, StaticPair};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quadrature::geometric_grid;
use crate::rng::{StreamRng, DEFAULT_SEED};

/// Same-marginal pair process `(X_0, X_t)`.
///
/// `draw_initial` fills `state` with whatever the sampler needs to condition
/// on; its first `dim()` entries are `X_0`. `draw_conditional` must then draw
/// `X_t` given that state.
pub trait PairSampler: Sync {
    fn dim(&self) -> usize;

    fn is_exchangeable(&self) -> bool;

    fn draw_initial(&self, rng: &mut StreamRng, state: &mut Vec<f64>);

    fn draw_conditional(&self, state: &[f64], t: f64, rng: &mut StreamRng, out: &mut [f64]);
}

/// Monte-Carlo and quadrature settings shared by the bound engines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    /// Scale `s > 0` dividing the first- and second-order increments.
    pub s: f64,
    /// Strictly increasing positive quadrature nodes.
    pub t_grid: Vec<f64>,
    /// Series truncation order (at least 3).
    pub k_max: usize,
    pub n_outer: usize,
    /// Conditional replicates per outer draw (at least 2).
    pub replicates: usize,
    pub seed: u64,
    /// Largest acceptable tail diagnostic.
    pub tail_limit: f64,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self {
            s: 1.0,
            t_grid: geometric_grid(1e-4, 20.0, 200).expect("static grid"),
            k_max: 8,
            n_outer: 2000,
            replicates: 8,
            seed: DEFAULT_SEED,
            tail_limit: 0.1,
        }
    }
}

impl BoundConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(invalid("s", format!("must be positive, got {}", self.s)));
        }
        if self.k_max < 3 {
            return Err(invalid("k_max", format!("must be >= 3, got {}", self.k_max)));
        }
        if self.replicates < 2 {
            return Err(invalid("replicates", "need at least 2 replicates to debias"));
        }
        if self.n_outer < 2 {
            return Err(invalid("n_outer", "need at least 2 outer draws"));
        }
        if self.t_grid.len() < 3 {
            return Err(invalid("t_grid", "need at least 3 nodes"));
        }
        if !(self.t_grid[0] > 0.0) || self.t_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("t_grid", "nodes must be positive and strictly increasing"));
        }
        if self.t_grid.iter().any(|t| !t.is_finite()) {
            return Err(invalid("t_grid", "nodes must be finite"));
        }
        if !(self.tail_limit > 0.0) {
            return Err(invalid("tail_limit", "must be positive"));
        }
        Ok(())
    }
}
