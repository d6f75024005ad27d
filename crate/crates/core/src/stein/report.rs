//! Bound reports and the shared integrand assembly.

use serde::Serialize;

use super::estimator::Estimate;
use super::BoundConfig;
use crate::error::{Error, Result};
use crate::quadrature::simpson;

/// Per-node record of the integrand.
#[derive(Debug, Clone, Serialize)]
pub struct NodeTerms {
    pub t: f64,
    /// `S(t)`.
    pub integrand: f64,
    pub integrand_stderr: f64,
    /// Raw (unclamped) conditional-moment estimates, order 1 first.
    pub raw: Vec<f64>,
    pub raw_stderr: Vec<f64>,
    /// Order weights at this node.
    pub weights: Vec<f64>,
    /// Additive share of each order in `S(t)`; sums to `integrand`.
    pub terms: Vec<f64>,
}

/// A bound value with everything needed to audit it.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub kind: String,
    pub p: f64,
    /// `∫ S(t) dt` including the endpoint and tail corrections.
    pub total: f64,
    pub total_stderr: f64,
    /// Final bound on the distance (equal to `total` for Gaussian targets).
    pub certificate: f64,
    /// Same integral with squared order weights (general targets only).
    pub squared_weights_total: Option<f64>,
    pub squared_weights_certificate: Option<f64>,
    /// `∫` of each order's share, order 1 first; sums to `total`.
    pub term_contributions: Vec<f64>,
    /// `(total - total without the last order) / total`.
    pub tail_diagnostic: f64,
    /// `∫_0^{t_0} S` under `S ∝ t^{-1/2}`.
    pub endpoint_correction: f64,
    /// `∫_{t_max}^∞ S` under `S ∝ e^{-t}` (Gaussian targets only).
    pub tail_correction: f64,
    /// Fitted exponent `α` in `S(t) ∝ t^{-α}` near the first node.
    pub local_exponent: f64,
    pub clamp_events: usize,
    pub term_evaluations: usize,
    pub nodes: Vec<NodeTerms>,
    pub notes: Vec<String>,
    pub config: BoundConfig,
}

impl BoundReport {
    /// `raw / raw_stderr` for order `k` at every node.
    pub fn z_scores(&self, k: usize) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|n| {
                let se = n.raw_stderr[k - 1];
                if se > 0.0 {
                    n.raw[k - 1] / se
                } else if n.raw[k - 1] == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .collect()
    }

    pub fn integrand(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.integrand).collect()
    }
}

/// How order terms combine into `S(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Assembly {
    /// `S = sqrt(sum_k w_k max(m_k, 0))` for squared moments `m_k`.
    RootOfSum,
    /// `S = sum_k w_k max(m_k, 0)^{1/p}` for `p`-th moments `m_k`.
    SumOfRoots { p: f64 },
}

pub(crate) struct NodeInput {
    pub t: f64,
    pub estimates: Vec<Estimate>,
    pub weights: Vec<f64>,
}

pub(crate) struct Assembled {
    pub nodes: Vec<NodeTerms>,
    pub total: f64,
    pub total_stderr: f64,
    pub contributions: Vec<f64>,
    pub tail_diagnostic: f64,
    pub endpoint: f64,
    pub tail: f64,
    pub local_exponent: f64,
    pub clamps: usize,
    pub evaluations: usize,
}

pub(crate) fn node_value(assembly: Assembly, raw: &[f64], se: &[f64], w: &[f64], upto: usize) -> (f64, f64, Vec<f64>) {
    match assembly {
        Assembly::RootOfSum => {
            let terms: Vec<f64> = (0..upto).map(|k| w[k] * raw[k].max(0.0)).collect();
            let s2: f64 = terms.iter().sum();
            let s = s2.sqrt();
            let var: f64 = (0..upto).map(|k| (w[k] * se[k]).powi(2)).sum();
            let se_s = if s > 0.0 { (var.sqrt() / (2.0 * s)).min(var.sqrt().sqrt()) } else { var.sqrt().sqrt() };
            let shares = terms.iter().map(|v| if s > 0.0 { v / s } else { 0.0 }).collect();
            (s, se_s, shares)
        }
        Assembly::SumOfRoots { p } => {
            let roots: Vec<f64> = (0..upto).map(|k| w[k] * raw[k].max(0.0).powf(1.0 / p)).collect();
            let var: f64 = (0..upto)
                .map(|k| {
                    let v = raw[k].max(0.0);
                    let lin = if v > 0.0 { se[k] / (p * v.powf((p - 1.0) / p)) } else { f64::INFINITY };
                    (w[k] * lin.min(se[k].powf(1.0 / p))).powi(2)
                })
                .sum();
            (roots.iter().sum(), var.sqrt(), roots)
        }
    }
}

fn integrate(grid: &[f64], f: &[f64], with_tail: bool) -> (f64, f64, f64) {
    let body = simpson(grid, f);
    let endpoint = 2.0 * grid[0] * f[0];
    let tail = if with_tail { f[f.len() - 1] } else { 0.0 };
    (body + endpoint + tail, endpoint, tail)
}

pub(crate) fn assemble(inputs: Vec<NodeInput>, assembly: Assembly, with_tail: bool, cfg: &BoundConfig) -> Result<Assembled> {
    let grid: Vec<f64> = inputs.iter().map(|n| n.t).collect();
    let k = inputs[0].estimates.len();
    let mut nodes = Vec::with_capacity(inputs.len());
    let mut without_last = Vec::with_capacity(inputs.len());
    let mut clamps = 0;
    for n in &inputs {
        let raw: Vec<f64> = n.estimates.iter().map(|e| e.value).collect();
        let se: Vec<f64> = n.estimates.iter().map(|e| e.stderr).collect();
        clamps += raw.iter().filter(|v| **v < 0.0).count();
        let (s, se_s, terms) = node_value(assembly, &raw, &se, &n.weights, k);
        if !s.is_finite() {
            return Err(Error::NonFinite("bound integrand"));
        }
        without_last.push(node_value(assembly, &raw, &se, &n.weights, k - 1).0);
        nodes.push(NodeTerms {
            t: n.t,
            integrand: s,
            integrand_stderr: se_s,
            raw,
            raw_stderr: se,
            weights: n.weights.clone(),
            terms,
        });
    }
    let s: Vec<f64> = nodes.iter().map(|n| n.integrand).collect();
    let se_s: Vec<f64> = nodes.iter().map(|n| n.integrand_stderr).collect();

    // local exponent from the first node and the first node a decade later
    let j = grid.iter().position(|&t| t >= 10.0 * grid[0]).unwrap_or(grid.len() - 1);
    let local_exponent = if s[0] > 0.0 && s[j] > 0.0 && j > 0 {
        -(s[j] / s[0]).ln() / (grid[j] / grid[0]).ln()
    } else {
        0.0
    };
    if local_exponent >= 0.95 {
        return Err(Error::NonIntegrable { exponent: local_exponent });
    }

    let (total, endpoint, tail) = integrate(&grid, &s, with_tail);
    let (total_stderr, _, _) = integrate(&grid, &se_s, with_tail);
    let (reduced, _, _) = integrate(&grid, &without_last, with_tail);
    let contributions = (0..k)
        .map(|kk| {
            let f: Vec<f64> = nodes.iter().map(|n| n.terms[kk]).collect();
            integrate(&grid, &f, with_tail).0
        })
        .collect();
    let tail_diagnostic = if total > 0.0 { ((total - reduced) / total).abs() } else { 0.0 };
    if tail_diagnostic > cfg.tail_limit {
        return Err(Error::Truncation {
            diagnostic: tail_diagnostic,
            limit: cfg.tail_limit,
        });
    }
    Ok(Assembled {
        nodes,
        total,
        total_stderr,
        contributions,
        tail_diagnostic,
        endpoint,
        tail,
        local_exponent,
        clamps,
        evaluations: inputs.len() * k,
    })
}
