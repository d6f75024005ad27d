//! Exact empirical Wasserstein distances.
//!
//! Equal-size uniform clouds go through the assignment solver; anything else
//! through the network simplex. One-dimensional equal-size samples use the
//! sorted (monotone) coupling, which is optimal for every `p >= 1`.

pub mod assignment;
pub mod simplex;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::rng::substream;

pub use assignment::solve_assignment;
pub use simplex::{solve_transport, TransportPlan};

/// Largest cost matrix the exact solvers accept.
pub const MAX_COST_ENTRIES: usize = 10_000_000;
/// Largest cloud routed to the assignment fast path.
pub const MAX_ASSIGNMENT_SIZE: usize = 2048;

/// Weighted point cloud in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalMeasure {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl EmpiricalMeasure {
    /// Cloud with weights; `points` is row-major `len x dim`.
    pub fn new(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "must be at least 1"));
        }
        if weights.is_empty() {
            return Err(Error::Empty("empirical measure"));
        }
        if points.len() != dim * weights.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * weights.len(),
                got: points.len(),
            });
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("measure support"));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(invalid("weights", "must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid("weights", format!("must sum to 1, got {total}")));
        }
        Ok(Self { dim, points, weights })
    }

    /// Cloud with equal weights.
    pub fn uniform(dim: usize, points: Vec<f64>) -> Result<Self> {
        if dim == 0 || points.is_empty() || points.len() % dim != 0 {
            return Err(invalid("points", "need a nonempty row-major buffer with len divisible by dim"));
        }
        let n = points.len() / dim;
        Self::new(dim, points, vec![1.0 / n as f64; n])
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != dim) {
            return Err(invalid("points", "rows have different lengths"));
        }
        Self::uniform(dim, rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn is_uniform(&self) -> bool {
        let w = 1.0 / self.len() as f64;
        self.weights.iter().all(|x| (x - w).abs() <= 1e-15)
    }

    /// Resample `len()` points with replacement according to the weights.
    pub fn resample<R: Rng>(&self, rng: &mut R) -> Self {
        let n = self.len();
        let mut cdf = Vec::with_capacity(n);
        let mut acc = 0.0;
        for w in &self.weights {
            acc += w;
            cdf.push(acc);
        }
        let mut counts = vec![0usize; n];
        for _ in 0..n {
            let u: f64 = rng.random::<f64>() * acc;
            let i = cdf.partition_point(|c| *c <= u).min(n - 1);
            counts[i] += 1;
        }
        let weights = counts.iter().map(|&c| c as f64 / n as f64).collect();
        Self {
            dim: self.dim,
            points: self.points.clone(),
            weights,
        }
    }
}

fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// `W_p` between two equal-size 1D samples via the sorted coupling.
pub fn wasserstein_1d(a: &[f64], b: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("1D samples"));
    }
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("1D samples"));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let s: f64 = x.iter().zip(&y).map(|(u, v)| (u - v).abs().powf(p)).sum();
    Ok((s / x.len() as f64).powf(1.0 / p))
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(invalid("p", format!("must be finite and >= 1, got {p}")))
    }
}

/// Exact `W_p` between two empirical measures under the Euclidean metric.
pub fn wasserstein_exact(a: &EmpiricalMeasure, b: &EmpiricalMeasure, p: f64) -> Result<f64> {
    wasserstein_exact_with(a, b, p, euclidean)
}

/// Exact `W_p` with a caller-supplied ground metric.
pub fn wasserstein_exact_with<F>(a: &EmpiricalMeasure, b: &EmpiricalMeasure, p: f64, metric: F) -> Result<f64>
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    check_p(p)?;
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            got: b.dim,
        });
    }
    // drop zero-mass atoms, they only enlarge the problem
    let ia: Vec<usize> = (0..a.len()).filter(|&i| a.weights[i] > 0.0).collect();
    let ib: Vec<usize> = (0..b.len()).filter(|&j| b.weights[j] > 0.0).collect();
    let (n, m) = (ia.len(), ib.len());
    let entries = n.saturating_mul(m);
    if entries > MAX_COST_ENTRIES {
        return Err(Error::SizeCap {
            what: "transport cost matrix",
            size: entries,
            cap: MAX_COST_ENTRIES,
        });
    }
    let cost: Vec<f64> = ia
        .par_iter()
        .flat_map_iter(|&i| ib.iter().map(move |&j| (i, j)))
        .map(|(i, j)| metric(a.point(i), b.point(j)).powf(p))
        .collect();
    let total = if n == m && n <= MAX_ASSIGNMENT_SIZE && n == a.len() && m == b.len() && a.is_uniform() && b.is_uniform() {
        let assign = solve_assignment(&cost, n);
        assign.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum::<f64>() / n as f64
    } else {
        let wa: Vec<f64> = ia.iter().map(|&i| a.weights[i]).collect();
        let mut wb: Vec<f64> = ib.iter().map(|&j| b.weights[j]).collect();
        // rebalance rounding so both sides carry the same mass
        let ratio = wa.iter().sum::<f64>() / wb.iter().sum::<f64>();
        wb.iter_mut().for_each(|w| *w *= ratio);
        solve_transport(&wa, &wb, &cost)?.cost
    };
    Ok(total.max(0.0).powf(1.0 / p))
}

/// `W_2(N(mean, diag(var)), N(0, I))`.
pub fn gaussian_w2_closed_form(mean: &[f64], diag_cov: &[f64]) -> Result<f64> {
    if mean.len() != diag_cov.len() {
        return Err(Error::DimensionMismatch {
            expected: mean.len(),
            got: diag_cov.len(),
        });
    }
    if let Some(v) = diag_cov.iter().find(|v| !(**v > 0.0)) {
        return Err(invalid("diag_cov", format!("variances must be positive, got {v}")));
    }
    let m2: f64 = mean.iter().map(|m| m * m).sum();
    let s2: f64 = diag_cov.iter().map(|v| (v.sqrt() - 1.0).powi(2)).sum();
    Ok((m2 + s2).sqrt())
}

/// Distance with a bootstrap standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceEstimate {
    pub distance: f64,
    pub stderr: f64,
}

/// Exact `W_p` on the full clouds plus a bootstrap standard error from
/// `replicates` resamples of both clouds.
pub fn bootstrap_wasserstein<F>(
    a: &EmpiricalMeasure,
    b: &EmpiricalMeasure,
    p: f64,
    replicates: usize,
    seed: u64,
    metric: F,
) -> Result<DistanceEstimate>
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    let solve = |x: &EmpiricalMeasure, y: &EmpiricalMeasure| -> Result<f64> {
        if x.dim == 1 && x.len() == y.len() && x.is_uniform() && y.is_uniform() {
            wasserstein_1d(&x.points, &y.points, p)
        } else {
            wasserstein_exact_with(x, y, p, &metric)
        }
    };
    let distance = solve(a, b)?;
    if replicates < 2 {
        return Ok(DistanceEstimate { distance, stderr: f64::NAN });
    }
    let reps: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, &[0xB007, r as u64]);
            let ra = a.resample(&mut rng);
            let rb = b.resample(&mut rng);
            let ra = expand_if_uniform_1d(&ra);
            let rb = expand_if_uniform_1d(&rb);
            solve(&ra, &rb)
        })
        .collect::<Result<_>>()?;
    let mean = reps.iter().sum::<f64>() / reps.len() as f64;
    let var = reps.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps.len() - 1) as f64;
    Ok(DistanceEstimate {
        distance,
        stderr: var.sqrt(),
    })
}

/// Turn integer-count weights back into a uniform cloud with repeated points
/// so the 1D sorted path stays available after resampling.
fn expand_if_uniform_1d(m: &EmpiricalMeasure) -> EmpiricalMeasure {
    if m.dim != 1 {
        return m.clone();
    }
    let n = m.len();
    let mut pts = Vec::with_capacity(n);
    for (i, w) in m.weights.iter().enumerate() {
        let c = (w * n as f64).round() as usize;
        pts.extend(std::iter::repeat_n(m.points[i], c));
    }
    if pts.len() != n {
        return m.clone();
    }
    EmpiricalMeasure {
        dim: 1,
        points: pts,
        weights: vec![1.0 / n as f64; n],
    }
}

/// Euclidean ground metric, exposed for callers of the generic entry points.
pub fn euclidean_metric(x: &[f64], y: &[f64]) -> f64 {
    euclidean(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_dimensional_examples() {
        assert_eq!(wasserstein_1d(&[0.3, 1.0], &[1.0, 0.3], 2.0).unwrap(), 0.0);
        assert_eq!(wasserstein_1d(&[0.0], &[1.0], 2.0).unwrap(), 1.0);
        assert!((wasserstein_1d(&[0.0, 1.0], &[1.0, 2.0], 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(wasserstein_1d(&[], &[], 2.0).is_err());
        assert!(wasserstein_1d(&[1.0], &[1.0, 2.0], 2.0).is_err());
    }

    #[test]
    fn exact_examples() {
        let x = EmpiricalMeasure::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let y = EmpiricalMeasure::from_rows(&[vec![4.0, 6.0]]).unwrap();
        assert!((wasserstein_exact(&x, &y, 2.0).unwrap() - 5.0).abs() < 1e-14);
        let a = EmpiricalMeasure::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let b = EmpiricalMeasure::from_rows(&[vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!((wasserstein_exact(&a, &b, 2.0).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(wasserstein_exact(&a, &a, 2.0).unwrap(), 0.0);
        let c = EmpiricalMeasure::from_rows(&[vec![0.0]]).unwrap();
        assert!(matches!(wasserstein_exact(&a, &c, 2.0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn weighted_hand_case() {
        // mass 3/4 at 0 and 1/4 at 1 against a point mass at 1: cost 3/4
        let a = EmpiricalMeasure::new(1, vec![0.0, 1.0], vec![0.75, 0.25]).unwrap();
        let b = EmpiricalMeasure::new(1, vec![1.0], vec![1.0]).unwrap();
        assert!((wasserstein_exact(&a, &b, 1.0).unwrap() - 0.75).abs() < 1e-14);
        assert!((wasserstein_exact(&a, &b, 2.0).unwrap() - 0.75f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_measures() {
        assert!(EmpiricalMeasure::new(1, vec![0.0, 1.0], vec![0.5, 0.6]).is_err());
        assert!(EmpiricalMeasure::new(1, vec![0.0, 1.0], vec![1.5, -0.5]).is_err());
        assert!(EmpiricalMeasure::new(2, vec![0.0, 1.0, 2.0], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn gaussian_closed_form() {
        assert_eq!(gaussian_w2_closed_form(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert!((gaussian_w2_closed_form(&[3.0, 4.0], &[1.0, 1.0]).unwrap() - 5.0).abs() < 1e-15);
        assert_eq!(gaussian_w2_closed_form(&[0.0], &[4.0]).unwrap(), 1.0);
        assert!(gaussian_w2_closed_form(&[0.0], &[0.0]).is_err());
    }

    #[test]
    fn size_cap_is_enforced() {
        let a = EmpiricalMeasure::uniform(1, vec![0.0; 4000]).unwrap();
        let b = EmpiricalMeasure::uniform(1, vec![0.0; 3000]).unwrap();
        assert!(matches!(wasserstein_exact(&a, &b, 2.0), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn bootstrap_is_reproducible() {
        let a = EmpiricalMeasure::uniform(1, (0..50).map(|i| i as f64 / 50.0).collect()).unwrap();
        let b = EmpiricalMeasure::uniform(1, (0..50).map(|i| (i as f64 / 50.0).powi(2)).collect()).unwrap();
        let e1 = bootstrap_wasserstein(&a, &b, 2.0, 20, 3, euclidean_metric).unwrap();
        let e2 = bootstrap_wasserstein(&a, &b, 2.0, 20, 3, euclidean_metric).unwrap();
        assert_eq!(e1, e2);
        assert!(e1.stderr > 0.0 && e1.stderr < e1.distance);
    }

    fn cloud(d: usize, n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-3.0f64..3.0, d * n)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn sorted_coupling_is_optimal(n in 1usize..=8, seed in 0u64..1000, p in 1.0f64..4.0) {
            let mut s = seed;
            let mut r = || { s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (s >> 11) as f64 / (1u64 << 53) as f64 * 4.0 - 2.0 };
            let a: Vec<f64> = (0..n).map(|_| r()).collect();
            let b: Vec<f64> = (0..n).map(|_| r()).collect();
            let w1 = wasserstein_1d(&a, &b, p).unwrap();
            let we = wasserstein_exact(&EmpiricalMeasure::uniform(1, a).unwrap(), &EmpiricalMeasure::uniform(1, b).unwrap(), p).unwrap();
            prop_assert!((w1 - we).abs() < 1e-9);
        }

        #[test]
        fn triangle_inequality(a in cloud(2, 6), b in cloud(2, 6), c in cloud(2, 6)) {
            let (a, b, c) = (EmpiricalMeasure::uniform(2, a).unwrap(), EmpiricalMeasure::uniform(2, b).unwrap(), EmpiricalMeasure::uniform(2, c).unwrap());
            let ab = wasserstein_exact(&a, &b, 2.0).unwrap();
            let bc = wasserstein_exact(&b, &c, 2.0).unwrap();
            let ac = wasserstein_exact(&a, &c, 2.0).unwrap();
            prop_assert!(ac <= ab + bc + 1e-9);
        }

        #[test]
        fn scaling(a in cloud(2, 5), b in cloud(2, 5), lambda in 0.1f64..10.0) {
            let w = wasserstein_exact(&EmpiricalMeasure::uniform(2, a.clone()).unwrap(), &EmpiricalMeasure::uniform(2, b.clone()).unwrap(), 2.0).unwrap();
            let sa = a.iter().map(|v| v * lambda).collect();
            let sb = b.iter().map(|v| v * lambda).collect();
            let ws = wasserstein_exact(&EmpiricalMeasure::uniform(2, sa).unwrap(), &EmpiricalMeasure::uniform(2, sb).unwrap(), 2.0).unwrap();
            prop_assert!((ws - lambda * w).abs() < 1e-9 * (1.0 + ws));
        }

        #[test]
        fn monotone_in_p(a in cloud(2, 6), b in cloud(2, 6), p in 1.0f64..3.0, dq in 0.0f64..3.0) {
            let (a, b) = (EmpiricalMeasure::uniform(2, a).unwrap(), EmpiricalMeasure::uniform(2, b).unwrap());
            prop_assert!(wasserstein_exact(&a, &b, p).unwrap() <= wasserstein_exact(&a, &b, p + dq).unwrap() + 1e-9);
        }

        #[test]
        fn simplex_matches_assignment_on_uniform(a in cloud(3, 9), b in cloud(3, 9)) {
            // weights perturbed by zero so the simplex path is forced through a one-point split
            let am = EmpiricalMeasure::uniform(3, a.clone()).unwrap();
            let bm = EmpiricalMeasure::uniform(3, b.clone()).unwrap();
            let fast = wasserstein_exact(&am, &bm, 2.0).unwrap();
            let mut pts = b.clone();
            pts.extend_from_slice(&b[..3]);
            let mut w = vec![1.0 / 9.0; 10];
            w[0] = 0.5 / 9.0;
            w[9] = 0.5 / 9.0;
            let split = EmpiricalMeasure::new(3, pts, w).unwrap();
            let slow = wasserstein_exact(&am, &split, 2.0).unwrap();
            prop_assert!((fast - slow).abs() < 1e-9);
        }
    }
}
