//! Bounds against the standard Gaussian.

use rayon::prelude::*;

use super::estimator::{conditional_terms, Centering, WeightMode};
use super::report::{assemble, node_value, Assembly, BoundReport, NodeInput, NodeTerms};
use super::{BoundConfig, PairSampler};
use crate::error::{invalid, Error, Result};
use crate::hermite::{factorial, hermite_lp_norm};
use crate::rng::substream;

/// Compare first and second moments of `X_0` and `X_t` (4σ rule).
pub(crate) fn marginal_check<S: PairSampler + ?Sized>(sampler: &S, t: f64, cfg: &BoundConfig) -> Option<String> {
    let d = sampler.dim();
    let n = cfg.n_outer.min(4000);
    let draws: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(cfg.seed, &[1, i as u64]);
            let mut state = Vec::new();
            sampler.draw_initial(&mut rng, &mut state);
            let mut xt = vec![0.0; d];
            let mut rr = substream(cfg.seed, &[2, i as u64, 0]);
            sampler.draw_conditional(&state, t, &mut rr, &mut xt);
            (state[..d].to_vec(), xt)
        })
        .collect();
    let nf = n as f64;
    for j in 0..d {
        for pow in [1, 2] {
            let diffs: Vec<f64> = draws.iter().map(|(a, b)| b[j].powi(pow) - a[j].powi(pow)).collect();
            let mean = diffs.iter().sum::<f64>() / nf;
            let sd = (diffs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt();
            if sd > 0.0 && mean.abs() > 4.0 * sd / nf.sqrt() {
                return Some(format!(
                    "marginal check: moment {pow} of coordinate {j} differs between X_0 and X_t at t = {t} by {mean:e} (> 4 sigma)"
                ));
            }
        }
    }
    None
}

fn run_nodes<S, W>(
    sampler: &S,
    cfg: &BoundConfig,
    orders: &[(usize, WeightMode)],
    centering: Centering<'_>,
    power: f64,
    weights: W,
) -> Result<Vec<NodeInput>>
where
    S: PairSampler + ?Sized,
    W: Fn(f64) -> Vec<f64>,
{
    cfg.t_grid
        .iter()
        .map(|&t| {
            Ok(NodeInput {
                t,
                estimates: conditional_terms(sampler, t, orders, centering, power, cfg)?,
                weights: weights(t),
            })
        })
        .collect()
}

fn finish(kind: &str, p: f64, a: super::report::Assembled, cfg: &BoundConfig, notes: Vec<String>) -> BoundReport {
    BoundReport {
        kind: kind.to_string(),
        p,
        total: a.total,
        total_stderr: a.total_stderr,
        certificate: a.total,
        squared_weights_total: None,
        squared_weights_certificate: None,
        term_contributions: a.contributions,
        tail_diagnostic: a.tail_diagnostic,
        endpoint_correction: a.endpoint,
        tail_correction: a.tail,
        local_exponent: a.local_exponent,
        clamp_events: a.clamps,
        term_evaluations: a.evaluations,
        nodes: a.nodes,
        notes,
        config: cfg.clone(),
    }
}

fn base_notes<S: PairSampler + ?Sized>(sampler: &S, cfg: &BoundConfig) -> Vec<String> {
    let mid = cfg.t_grid[cfg.t_grid.len() / 2];
    marginal_check(sampler, mid, cfg).into_iter().collect()
}

fn gauss_w2_inputs<S: PairSampler + ?Sized>(sampler: &S, cfg: &BoundConfig) -> Result<Vec<NodeInput>> {
    cfg.validate()?;
    let s = cfg.s;
    let orders: Vec<(usize, WeightMode)> = (1..=cfg.k_max)
        .map(|k| (k, if k <= 2 { WeightMode::Euclidean } else { WeightMode::HNorm }))
        .collect();
    let k_max = cfg.k_max;
    let weights = |t: f64| -> Vec<f64> {
        let e = (-2.0 * t).exp();
        let g = (2.0 * t).exp_m1();
        (1..=k_max)
            .map(|k| match k {
                1 => e,
                2 => e / g,
                _ => e / ((s * factorial(k)).powi(2) * g.powi(k as i32 - 1)),
            })
            .collect()
    };
    run_nodes(sampler, cfg, &orders, Centering::Gaussian { s }, 2.0, weights)
}

/// `W_2(ν, γ) <= ∫ S(t) dt` with
/// `S² = e^{-2t} A_1 + e^{-2t}/(e^{2t}-1) A_2 + Σ_{k>=3} e^{-2t} A_k / ((s k!)² (e^{2t}-1)^{k-1})`,
/// `A_1 = E‖E[Δ/s + X_0 | X_0]‖²`, `A_2 = E‖E[Δ⊗Δ/(2s) - I | X_0]‖²` and
/// `A_k = E‖E[Δ^{⊗k} | X_0]‖_H²`.
pub fn gauss_w2_bound<S: PairSampler + ?Sized>(sampler: &S, cfg: &BoundConfig) -> Result<BoundReport> {
    let inputs = gauss_w2_inputs(sampler, cfg)?;
    let a = assemble(inputs, Assembly::RootOfSum, true, cfg)?;
    Ok(finish("gauss_w2", 2.0, a, cfg, base_notes(sampler, cfg)))
}

/// Per-node terms of [`gauss_w2_bound`] without integrating, for pairs whose
/// integrand need not be integrable at 0 (noise-floor checks).
pub fn gauss_w2_nodes<S: PairSampler + ?Sized>(sampler: &S, cfg: &BoundConfig) -> Result<Vec<NodeTerms>> {
    Ok(gauss_w2_inputs(sampler, cfg)?
        .into_iter()
        .map(|n| {
            let raw: Vec<f64> = n.estimates.iter().map(|e| e.value).collect();
            let se: Vec<f64> = n.estimates.iter().map(|e| e.stderr).collect();
            let (integrand, integrand_stderr, terms) = node_value(Assembly::RootOfSum, &raw, &se, &n.weights, raw.len());
            NodeTerms {
                t: n.t,
                integrand,
                integrand_stderr,
                raw,
                raw_stderr: se,
                weights: n.weights,
                terms,
            }
        })
        .collect())
}

/// One-dimensional `W_p(ν, γ)` bound with per-order `L^p` terms weighted by
/// the Gaussian `L^p` norms of Hermite polynomials.
pub fn wp_gauss_1d_bound<S: PairSampler + ?Sized>(sampler: &S, p: f64, cfg: &BoundConfig) -> Result<BoundReport> {
    cfg.validate()?;
    if sampler.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: sampler.dim(),
        });
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(invalid("p", format!("must be finite and >= 1, got {p}")));
    }
    let s = cfg.s;
    let hnorms: Vec<f64> = (1..cfg.k_max).map(|j| hermite_lp_norm(j, p, 32)).collect::<Result<_>>()?;
    let orders: Vec<(usize, WeightMode)> = (1..=cfg.k_max).map(|k| (k, WeightMode::Euclidean)).collect();
    let k_max = cfg.k_max;
    let weights = |t: f64| -> Vec<f64> {
        let e = (-t).exp();
        let g = (2.0 * t).exp_m1();
        (1..=k_max)
            .map(|k| match k {
                1 => e,
                2 => e * hnorms[0] / g.sqrt(),
                _ => e * hnorms[k - 2] / (factorial(k) * s * g.powf((k as f64 - 1.0) / 2.0)),
            })
            .collect()
    };
    let inputs = run_nodes(sampler, cfg, &orders, Centering::Gaussian { s }, p, weights)?;
    let a = assemble(inputs, Assembly::SumOfRoots { p }, true, cfg)?;
    let mut notes = base_notes(sampler, cfg);
    if p == 2.0 {
        notes.push(
            "p = 2: each order's term equals the square root of the corresponding L2-bound term; \
             this bound sums the roots while the L2 bound takes the root of the sum, so it is never smaller"
                .to_string(),
        );
    }
    Ok(finish("wp_gauss_1d", p, a, cfg, notes))
}

/// `W_p(ν, γ)` bound for exchangeable pairs in any dimension.
pub fn wp_gauss_exch_bound<S: PairSampler + ?Sized>(sampler: &S, p: f64, cfg: &BoundConfig) -> Result<BoundReport> {
    cfg.validate()?;
    if !sampler.is_exchangeable() {
        return Err(Error::NotExchangeable);
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(invalid("p", format!("must be finite and >= 1, got {p}")));
    }
    let s = cfg.s;
    let q = (p - 1.0).max(1.0);
    let orders: Vec<(usize, WeightMode)> = (1..=cfg.k_max)
        .map(|k| (k, if k <= 2 { WeightMode::Euclidean } else { WeightMode::HNorm }))
        .collect();
    let k_max = cfg.k_max;
    let weights = |t: f64| -> Vec<f64> {
        let e = (-t).exp();
        let r = q / (2.0 * t).exp_m1();
        (1..=k_max)
            .map(|k| match k {
                1 => e,
                2 => e * r.sqrt(),
                _ => e / (2.0 * s * factorial(k - 1)) * r.powf((k as f64 - 1.0) / 2.0),
            })
            .collect()
    };
    let inputs = run_nodes(sampler, cfg, &orders, Centering::Gaussian { s }, p, weights)?;
    let a = assemble(inputs, Assembly::SumOfRoots { p }, true, cfg)?;
    Ok(finish("wp_gauss_exch", p, a, cfg, base_notes(sampler, cfg)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::geometric_grid;
    use crate::stein::samplers::{MarkovStepPair, OrnsteinUhlenbeckPair, StaticPair};

    fn small_cfg() -> BoundConfig {
        BoundConfig {
            t_grid: geometric_grid(1e-4, 20.0, 120).unwrap(),
            n_outer: 400,
            replicates: 4,
            ..BoundConfig::default()
        }
    }

    #[test]
    fn point_mass_bound_equals_sqrt_d() {
        // S(t) = e^{-t} sqrt(d / (e^{2t} - 1)), whose integral is sqrt(d) = W_2(δ_0, γ)
        for d in [1usize, 3] {
            let r = gauss_w2_bound(&StaticPair::point_mass(vec![0.0; d]), &small_cfg()).unwrap();
            let want = (d as f64).sqrt();
            assert!((r.total - want).abs() < 2e-3 * want, "d={d}: {}", r.total);
            assert!((r.local_exponent - 0.5).abs() < 0.01);
            assert_eq!(r.total_stderr, 0.0);
        }
    }

    #[test]
    fn contributions_sum_to_total() {
        let r = gauss_w2_bound(&StaticPair::point_mass(vec![0.5, -0.5]), &small_cfg()).unwrap();
        let s: f64 = r.term_contributions.iter().sum();
        assert!((s - r.total).abs() < 1e-12 * r.total);
    }

    #[test]
    fn ou_pair_mismatch_terms_are_zero() {
        let ou = OrnsteinUhlenbeckPair::new(2, 1e-5);
        let cfg = BoundConfig {
            s: ou.matched_scale(),
            ..small_cfg()
        };
        let nodes = gauss_w2_nodes(&ou, &cfg).unwrap();
        for k in [1, 2] {
            assert!(nodes.iter().all(|n| n.raw[k - 1].abs() < 3.0 * n.raw_stderr[k - 1]), "k={k}");
        }
        // order 3 makes S ~ step / t near 0, which is not integrable
        assert!(matches!(gauss_w2_bound(&ou, &cfg), Err(Error::NonIntegrable { .. })));
    }

    #[test]
    fn refuses_non_exchangeable() {
        let pair = MarkovStepPair::new(1, 0.5, |_, x| x[0] = 0.0, |x, _, o| o[0] = x[0]);
        assert!(matches!(wp_gauss_exch_bound(&pair, 2.0, &small_cfg()), Err(Error::NotExchangeable)));
    }

    #[test]
    fn one_dimensional_bound_needs_d1() {
        assert!(wp_gauss_1d_bound(&StaticPair::gaussian(2), 2.0, &small_cfg()).is_err());
    }

    #[test]
    fn lp_bounds_on_point_mass() {
        // p = 2, point mass at 0 in 1D: only order 2 survives with E|−1|^2 = 1
        let r = wp_gauss_1d_bound(&StaticPair::point_mass(vec![0.0]), 2.0, &small_cfg()).unwrap();
        assert!((r.total - 1.0).abs() < 2e-3);
        let e = wp_gauss_exch_bound(&StaticPair::point_mass(vec![0.0]), 2.0, &small_cfg()).unwrap();
        assert!((e.total - 1.0).abs() < 2e-3);
        // p = 4: the exchangeable weight picks up sqrt(3)
        let e4 = wp_gauss_exch_bound(&StaticPair::point_mass(vec![0.0]), 4.0, &small_cfg()).unwrap();
        assert!((e4.total - 3f64.sqrt()).abs() < 4e-3);
    }

    #[test]
    fn config_validation() {
        let bad = BoundConfig { k_max: 2, ..small_cfg() };
        assert!(gauss_w2_bound(&StaticPair::gaussian(1), &bad).is_err());
        let bad = BoundConfig { s: 0.0, ..small_cfg() };
        assert!(gauss_w2_bound(&StaticPair::gaussian(1), &bad).is_err());
        let bad = BoundConfig { t_grid: vec![0.0, 1.0, 2.0], ..small_cfg() };
        assert!(gauss_w2_bound(&StaticPair::gaussian(1), &bad).is_err());
    }
}
