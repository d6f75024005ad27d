//! Generic pair samplers.
//!
//! The construction for normalized sums lives in [`crate::clt`].

use rand::Rng;
use rand_distr::StandardNormal;

use super::PairSampler;
use crate::rng::StreamRng;

fn fill_gaussian(rng: &mut StreamRng, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
}

/// Ornstein–Uhlenbeck pair on the standard Gaussian with a fixed step.
///
/// `X_t = e^{-τ} X_0 + sqrt(1 - e^{-2τ}) Z` for every `t`, with `τ` fixed.
/// With `s = 1 - e^{-τ}` the first-order mismatch is exactly zero and the
/// second-order one is `O(τ²)`, which makes this the reference noise floor.
#[derive(Debug, Clone)]
pub struct OrnsteinUhlenbeckPair {
    dim: usize,
    step: f64,
}

impl OrnsteinUhlenbeckPair {
    pub fn new(dim: usize, step: f64) -> Self {
        assert!(dim >= 1 && step > 0.0);
        Self { dim, step }
    }

    /// The scale `1 - e^{-τ}` matching the drift of the step.
    pub fn matched_scale(&self) -> f64 {
        -(-self.step).exp_m1()
    }
}

impl PairSampler for OrnsteinUhlenbeckPair {
    fn dim(&self) -> usize {
        self.dim
    }

    fn is_exchangeable(&self) -> bool {
        true
    }

    fn draw_initial(&self, rng: &mut StreamRng, state: &mut Vec<f64>) {
        state.resize(self.dim, 0.0);
        fill_gaussian(rng, state);
    }

    fn draw_conditional(&self, state: &[f64], _t: f64, rng: &mut StreamRng, out: &mut [f64]) {
        let a = (-self.step).exp();
        let b = (-(-2.0 * self.step).exp_m1()).sqrt();
        for (o, x) in out.iter_mut().zip(state) {
            let z: f64 = rng.sample(StandardNormal);
            *o = a * x + b * z;
        }
    }
}

/// Constant pair `X_t = X_0`, with `X_0` either a point mass or standard Gaussian.
#[derive(Debug, Clone)]
pub struct StaticPair {
    dim: usize,
    point: Option<Vec<f64>>,
}

impl StaticPair {
    pub fn point_mass(point: Vec<f64>) -> Self {
        assert!(!point.is_empty());
        Self {
            dim: point.len(),
            point: Some(point),
        }
    }

    pub fn gaussian(dim: usize) -> Self {
        assert!(dim >= 1);
        Self { dim, point: None }
    }
}

impl PairSampler for StaticPair {
    fn dim(&self) -> usize {
        self.dim
    }

    fn is_exchangeable(&self) -> bool {
        true
    }

    fn draw_initial(&self, rng: &mut StreamRng, state: &mut Vec<f64>) {
        state.resize(self.dim, 0.0);
        match &self.point {
            Some(p) => state.copy_from_slice(p),
            None => fill_gaussian(rng, state),
        }
    }

    fn draw_conditional(&self, state: &[f64], _t: f64, _rng: &mut StreamRng, out: &mut [f64]) {
        out.copy_from_slice(&state[..self.dim]);
    }
}

/// `X_0` and `X_t` independent standard Gaussians.
#[derive(Debug, Clone)]
pub struct IndependentGaussianPair {
    dim: usize,
}

impl IndependentGaussianPair {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1);
        Self { dim }
    }
}

impl PairSampler for IndependentGaussianPair {
    fn dim(&self) -> usize {
        self.dim
    }

    fn is_exchangeable(&self) -> bool {
        true
    }

    fn draw_initial(&self, rng: &mut StreamRng, state: &mut Vec<f64>) {
        state.resize(self.dim, 0.0);
        fill_gaussian(rng, state);
    }

    fn draw_conditional(&self, _state: &[f64], _t: f64, rng: &mut StreamRng, out: &mut [f64]) {
        fill_gaussian(rng, out);
    }
}

type InitialFn = dyn Fn(&mut StreamRng, &mut [f64]) + Send + Sync;
type StepFn = dyn Fn(&[f64], &mut StreamRng, &mut [f64]) + Send + Sync;

/// One step of a Markov chain switched on at time `τ`:
/// `X_t = M_0 + 1{t >= τ} (M_1 - M_0)`.
///
/// `initial` must draw from the chain's invariant law. Such a pair is
/// exchangeable only when the chain is reversible, which is not assumed.
pub struct MarkovStepPair {
    dim: usize,
    tau: f64,
    initial: Box<InitialFn>,
    step: Box<StepFn>,
}

impl MarkovStepPair {
    pub fn new(
        dim: usize,
        tau: f64,
        initial: impl Fn(&mut StreamRng, &mut [f64]) + Send + Sync + 'static,
        step: impl Fn(&[f64], &mut StreamRng, &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            tau,
            initial: Box::new(initial),
            step: Box::new(step),
        }
    }
}

impl PairSampler for MarkovStepPair {
    fn dim(&self) -> usize {
        self.dim
    }

    fn is_exchangeable(&self) -> bool {
        false
    }

    fn draw_initial(&self, rng: &mut StreamRng, state: &mut Vec<f64>) {
        state.resize(self.dim, 0.0);
        (self.initial)(rng, state);
    }

    fn draw_conditional(&self, state: &[f64], t: f64, rng: &mut StreamRng, out: &mut [f64]) {
        if t >= self.tau {
            (self.step)(&state[..self.dim], rng, out);
        } else {
            out.copy_from_slice(&state[..self.dim]);
        }
    }
}
