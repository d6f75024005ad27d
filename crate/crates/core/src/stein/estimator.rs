//! Nested Monte-Carlo estimation of `E‖E[Y_k | X_0]‖^q`.
//!
//! For `q = 2` the inner conditional mean is squared by the replicate
//! U-statistic `sum_{r != r'} <Y_r, Y_r'> / (R(R-1))`, which is unbiased.
//! Other powers use the plug-in `‖mean_r Y_r‖^q`, biased upward by the
//! conditional variance over `R`.

use rayon::prelude::*;
use serde::Serialize;

use super::diffusion::DiffusionSpec;
use super::{BoundConfig, PairSampler};
use crate::error::{invalid, Error, Result};
use crate::rng::substream;
use crate::tensor::{a_dot_flat, hermite_weights, outer_power_into, weighted_dot};

/// How the increment is turned into the order-`k` quantity `Y_k`.
#[derive(Clone, Copy)]
pub enum Centering<'a> {
    /// Standard Gaussian target: `Δ/s + X_0`, `Δ⊗Δ/(2s) - I`, then `Δ^{⊗k}`.
    Gaussian { s: f64 },
    /// Diffusion target: `Δ/s - b(X_0)`, `Δ⊗Δ/(2s) - a(X_0)`, then `Δ^{⊗k}`.
    Diffusion { s: f64, spec: &'a DiffusionSpec },
    /// Plain `Δ^{⊗k}` at every order.
    Raw,
}

/// Inner product used for `‖E[Y_k | X_0]‖`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WeightMode {
    Euclidean,
    /// Hermite-weighted `‖·‖_H`.
    HNorm,
    /// `‖·‖_{a^{-1}(X_0)}`; needs a diffusion to read `a` from.
    AInverse,
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

struct OrderPlan {
    order: usize,
    mode: WeightMode,
    weights: Vec<f64>,
}

/// Estimate `E‖E[Y_k | X_0]‖^power` for each requested order at time `t`.
///
/// `power == 2` selects the unbiased U-statistic. Outer draw `i` uses the
/// substream `(seed, i)` and its replicate `r` uses `(seed, i, r)`, so
/// estimates at different `t` share random numbers.
pub fn conditional_terms<S: PairSampler + ?Sized>(
    sampler: &S,
    t: f64,
    orders: &[(usize, WeightMode)],
    centering: Centering<'_>,
    power: f64,
    cfg: &BoundConfig,
) -> Result<Vec<Estimate>> {
    let d = sampler.dim();
    let r_count = cfg.replicates;
    if r_count < 2 {
        return Err(invalid("replicates", "need at least 2 replicates to debias"));
    }
    if !(power >= 1.0) {
        return Err(invalid("p", format!("must be >= 1, got {power}")));
    }
    let spec = match centering {
        Centering::Diffusion { spec, .. } => Some(spec),
        _ => None,
    };
    if let Some(spec) = spec {
        if spec.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                got: d,
            });
        }
    }
    let plans: Vec<OrderPlan> = orders
        .iter()
        .map(|&(order, mode)| {
            if order == 0 {
                return Err(invalid("k", "orders start at 1"));
            }
            if mode == WeightMode::AInverse && spec.is_none() {
                return Err(invalid("weight_mode", "a^{-1} weighting needs a diffusion centering"));
            }
            crate::tensor::SymmetricTensor::zeros(order, d)?;
            let weights = if mode == WeightMode::HNorm {
                hermite_weights(order, d)
            } else {
                Vec::new()
            };
            Ok(OrderPlan { order, mode, weights })
        })
        .collect::<Result<_>>()?;
    let square = power == 2.0;

    let per_draw: Vec<Vec<f64>> = (0..cfg.n_outer)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let mut rng = substream(cfg.seed, &[1, i as u64]);
            let mut state = Vec::new();
            sampler.draw_initial(&mut rng, &mut state);
            let x0 = &state[..d];
            let mut drift = vec![0.0; d];
            let mut diff = vec![0.0; d * d];
            let mut ainv = Vec::new();
            if let Some(spec) = spec {
                spec.drift_into(x0, &mut drift);
                spec.diffusion_into(x0, &mut diff);
                if plans.iter().any(|p| p.mode == WeightMode::AInverse) {
                    ainv = spec.invert(&diff)?;
                }
            }
            let mut xt = vec![0.0; d];
            let mut delta = vec![0.0; d];
            let mut sums: Vec<Vec<f64>> = plans.iter().map(|p| vec![0.0; d.pow(p.order as u32)]).collect();
            let mut selfdot = vec![0.0; plans.len()];
            let mut y = Vec::new();
            let (mut tmp, mut scratch) = (Vec::new(), Vec::new());
            for r in 0..r_count {
                let mut rr = substream(cfg.seed, &[2, i as u64, r as u64]);
                sampler.draw_conditional(&state, t, &mut rr, &mut xt);
                for j in 0..d {
                    delta[j] = xt[j] - x0[j];
                }
                for (pi, plan) in plans.iter().enumerate() {
                    let len = d.pow(plan.order as u32);
                    y.resize(len, 0.0);
                    outer_power_into(&delta, plan.order, &mut y);
                    match (centering, plan.order) {
                        (Centering::Gaussian { s }, 1) => {
                            for j in 0..d {
                                y[j] = y[j] / s + x0[j];
                            }
                        }
                        (Centering::Gaussian { s }, 2) => {
                            y.iter_mut().for_each(|v| *v /= 2.0 * s);
                            for j in 0..d {
                                y[j * d + j] -= 1.0;
                            }
                        }
                        (Centering::Diffusion { s, .. }, 1) => {
                            for j in 0..d {
                                y[j] = y[j] / s - drift[j];
                            }
                        }
                        (Centering::Diffusion { s, .. }, 2) => {
                            for (v, a) in y.iter_mut().zip(&diff) {
                                *v = *v / (2.0 * s) - a;
                            }
                        }
                        _ => {}
                    }
                    if y.iter().any(|v| !v.is_finite()) {
                        return Err(Error::NonFinite("pair increments"));
                    }
                    if square {
                        selfdot[pi] += inner(plan, &y, &y, &ainv, d, &mut tmp, &mut scratch);
                    }
                    sums[pi].iter_mut().zip(&y).for_each(|(s, v)| *s += v);
                }
            }
            let rf = r_count as f64;
            Ok(plans
                .iter()
                .enumerate()
                .map(|(pi, plan)| {
                    let s = &sums[pi];
                    let ss = inner(plan, s, s, &ainv, d, &mut tmp, &mut scratch);
                    if square {
                        (ss - selfdot[pi]) / (rf * (rf - 1.0))
                    } else {
                        (ss.max(0.0) / (rf * rf)).powf(power / 2.0)
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let n = per_draw.len() as f64;
    let out = (0..plans.len())
        .map(|pi| {
            let vals: Vec<f64> = per_draw.iter().map(|v| v[pi]).collect();
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            Estimate {
                value: mean,
                stderr: (var / n).sqrt(),
            }
        })
        .collect::<Vec<_>>();
    if out.iter().any(|e| !e.value.is_finite()) {
        return Err(Error::NonFinite("conditional moment estimate"));
    }
    Ok(out)
}

fn inner(
    plan: &OrderPlan,
    x: &[f64],
    y: &[f64],
    ainv: &[f64],
    d: usize,
    tmp: &mut Vec<f64>,
    scratch: &mut Vec<f64>,
) -> f64 {
    match plan.mode {
        WeightMode::Euclidean => x.iter().zip(y).map(|(a, b)| a * b).sum(),
        WeightMode::HNorm => weighted_dot(x, y, &plan.weights),
        WeightMode::AInverse => a_dot_flat(x, y, plan.order, d, ainv, tmp, scratch),
    }
}

/// Unbiased estimate of `E‖E[Y_k | X_0]‖²` for a single order.
pub fn conditional_moment_sq<S: PairSampler + ?Sized>(
    sampler: &S,
    t: f64,
    k: usize,
    centering: Centering<'_>,
    weight_mode: WeightMode,
    cfg: &BoundConfig,
) -> Result<Estimate> {
    Ok(conditional_terms(sampler, t, &[(k, weight_mode)], centering, 2.0, cfg)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stein::samplers::{IndependentGaussianPair, StaticPair};
    use crate::rng::StreamRng;

    struct Shift(Vec<f64>);

    impl PairSampler for Shift {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn is_exchangeable(&self) -> bool {
            false
        }
        fn draw_initial(&self, rng: &mut StreamRng, state: &mut Vec<f64>) {
            use rand::Rng;
            state.clear();
            state.extend(self.0.iter().map(|_| rng.random::<f64>()));
        }
        fn draw_conditional(&self, state: &[f64], _t: f64, _rng: &mut StreamRng, out: &mut [f64]) {
            for j in 0..out.len() {
                out[j] = state[j] + self.0[j];
            }
        }
    }

    fn cfg(n_outer: usize, replicates: usize) -> BoundConfig {
        BoundConfig {
            n_outer,
            replicates,
            ..BoundConfig::default()
        }
    }

    #[test]
    fn constant_pair_gives_zero() {
        let e = conditional_moment_sq(&StaticPair::gaussian(2), 0.5, 1, Centering::Raw, WeightMode::Euclidean, &cfg(200, 4)).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn deterministic_shift_is_exact() {
        let v = vec![0.6, -0.8];
        let e = conditional_moment_sq(&Shift(v), 1.0, 1, Centering::Raw, WeightMode::Euclidean, &cfg(100, 3)).unwrap();
        assert!((e.value - 1.0).abs() < 1e-14);
        assert!(e.stderr < 1e-14);
        // order 3, Hermite weights: <v^3, v^3>_H = |v|^2 * 2 * h_2(v∘v)
        let v = vec![0.6, -0.8];
        let (a, b) = (0.36, 0.64);
        let expected = 2.0 * (a * a + a * b + b * b);
        let e = conditional_moment_sq(&Shift(v), 1.0, 3, Centering::Raw, WeightMode::HNorm, &cfg(50, 2)).unwrap();
        assert!((e.value - expected).abs() < 1e-13);
    }

    #[test]
    fn independent_pair_matches_closed_form() {
        // E[X_t - X_0 | X_0] = -X_0, so the target is E[X_0^2] = 1
        let e = conditional_moment_sq(&IndependentGaussianPair::new(1), 1.0, 1, Centering::Raw, WeightMode::Euclidean, &cfg(10_000, 4)).unwrap();
        assert!((e.value - 1.0).abs() < 3.0 * e.stderr, "{e:?}");
        // brute-force plug-in with many replicates minus the known bias Var/R = 1/R
        let r = 10_000;
        let plug = conditional_terms(&IndependentGaussianPair::new(1), 1.0, &[(1, WeightMode::Euclidean)], Centering::Raw, 2.0 + 1e-12, &cfg(400, r)).unwrap()[0];
        assert!((plug.value - 1.0 / r as f64 - 1.0).abs() < 4.0 * plug.stderr + 1e-3);
    }

    #[test]
    fn u_statistic_stderr_scales() {
        let c1 = cfg(1000, 4);
        let c2 = BoundConfig { n_outer: 10_000, ..c1.clone() };
        let p = IndependentGaussianPair::new(1);
        let e1 = conditional_moment_sq(&p, 1.0, 1, Centering::Raw, WeightMode::Euclidean, &c1).unwrap();
        let e2 = conditional_moment_sq(&p, 1.0, 1, Centering::Raw, WeightMode::Euclidean, &c2).unwrap();
        let ratio = e1.stderr / e2.stderr;
        assert!(ratio > 2.5 && ratio < 4.0, "ratio {ratio}");
        assert!((e1.value - 1.0).abs() < 3.0 * e1.stderr);
        assert!((e2.value - 1.0).abs() < 3.0 * e2.stderr);
    }

    #[test]
    fn rejects_single_replicate() {
        let r = conditional_moment_sq(&StaticPair::gaussian(1), 1.0, 1, Centering::Raw, WeightMode::Euclidean, &cfg(10, 1));
        assert!(r.is_err());
    }

    #[test]
    fn ainv_needs_diffusion() {
        let r = conditional_moment_sq(&StaticPair::gaussian(1), 1.0, 1, Centering::Raw, WeightMode::AInverse, &cfg(10, 2));
        assert!(r.is_err());
    }
}
