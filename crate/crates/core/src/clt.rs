//! Exchangeable pairs for normalized sums `S_n = n^{-1/2} Σ X_i` and the
//! quantities used to check their convergence rate.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{invalid, Error, Result};
use crate::hermite::factorial;
use crate::rng::{substream, StreamRng};
use crate::stats::loglog_slope;
use crate::stein::PairSampler;
use crate::transport::{bootstrap_wasserstein, euclidean_metric, DistanceEstimate, EmpiricalMeasure};

/// Largest `n` for which a pair keeps all summands.
pub const MAX_SUMMANDS: usize = 100_000;

/// Coordinate law of the i.i.d. summands; coordinates are independent and
/// standardized (mean 0, variance 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummandKind {
    Rademacher,
    /// Uniform on `[-√3, √3]`.
    Uniform,
    /// `E - 1` with `E ~ Exp(1)`.
    Exponential,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummandDistribution {
    kind: SummandKind,
    dim: usize,
}

fn open_unit(rng: &mut StreamRng) -> f64 {
    ((rng.random::<u64>() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

impl SummandDistribution {
    /// Builds the law and checks mean 0 and identity covariance on `10^5` draws (4σ).
    pub fn new(kind: SummandKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("d", "must be >= 1"));
        }
        let dist = Self { kind, dim };
        dist.validate()?;
        Ok(dist)
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim;
        let n = 100_000;
        let mut rng = substream(0x5EED, &[self.dim as u64]);
        let mut x = vec![0.0; d];
        let mut s1 = vec![0.0; d];
        let mut s2 = vec![0.0; d * d];
        let mut s4 = vec![0.0; d * d];
        for _ in 0..n {
            self.sample_into(&mut rng, &mut x);
            for i in 0..d {
                s1[i] += x[i];
                for j in 0..d {
                    let v = x[i] * x[j];
                    s2[i * d + j] += v;
                    s4[i * d + j] += v * v;
                }
            }
        }
        let nf = n as f64;
        for i in 0..d {
            if (s1[i] / nf).abs() > 4.0 / nf.sqrt() {
                return Err(invalid("summand", format!("coordinate {i} mean is not 0")));
            }
            for j in 0..d {
                let m = s2[i * d + j] / nf;
                let sd = ((s4[i * d + j] / nf - m * m).max(0.0) / nf).sqrt();
                let want = if i == j { 1.0 } else { 0.0 };
                if (m - want).abs() > 4.0 * sd.max(1e-12) {
                    return Err(invalid("summand", format!("second moment ({i},{j}) is not identity")));
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> SummandKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coordinate quantile function on `(0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match self.kind {
            SummandKind::Rademacher => {
                if u < 0.5 {
                    -1.0
                } else {
                    1.0
                }
            }
            SummandKind::Uniform => 3f64.sqrt() * (2.0 * u - 1.0),
            SummandKind::Exponential => -(-u).ln_1p() - 1.0,
            SummandKind::Gaussian => std_normal().inverse_cdf(u),
        }
    }

    pub fn sample_into(&self, rng: &mut StreamRng, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.quantile(open_unit(rng));
        }
    }

    /// `E[X_c^j]` for one coordinate.
    pub fn coordinate_moment(&self, j: usize) -> f64 {
        let even = j % 2 == 0;
        match self.kind {
            SummandKind::Rademacher => f64::from(u8::from(even)),
            SummandKind::Uniform if even => 3f64.powi(j as i32 / 2) / (j as f64 + 1.0),
            SummandKind::Gaussian if even => (1..j).step_by(2).map(|v| v as f64).product(),
            SummandKind::Uniform | SummandKind::Gaussian => 0.0,
            // central moments of Exp(1) are the derangement numbers
            SummandKind::Exponential => {
                let (mut a, mut b) = (1.0, 0.0);
                if j == 0 {
                    return 1.0;
                }
                for i in 2..=j {
                    let c = (i as f64 - 1.0) * (a + b);
                    a = b;
                    b = c;
                }
                b
            }
        }
    }

    /// Closed form for `E‖X‖^r`, when one is known.
    pub fn norm_moment(&self, r: f64) -> Option<f64> {
        if !(r >= 0.0) || !r.is_finite() {
            return None;
        }
        let df = self.dim as f64;
        match self.kind {
            SummandKind::Rademacher => return Some(df.powf(r / 2.0)),
            SummandKind::Gaussian => {
                return Some((r / 2.0 * 2f64.ln() + ln_gamma((df + r) / 2.0) - ln_gamma(df / 2.0)).exp())
            }
            _ => {}
        }
        if self.dim == 1 {
            return Some(match self.kind {
                SummandKind::Uniform => 3f64.powf(r / 2.0) / (r + 1.0),
                // E|E - 1|^r = e^{-1} (Γ(r+1) + ∫_0^1 y^r e^y dy)
                _ => {
                    let mut series = 0.0;
                    let mut fact = 1.0;
                    for j in 0..60 {
                        if j > 0 {
                            fact *= j as f64;
                        }
                        series += 1.0 / (fact * (r + j as f64 + 1.0));
                    }
                    (-1f64).exp() * (gamma(r + 1.0) + series)
                }
            });
        }
        let half = r / 2.0;
        if half.fract() == 0.0 {
            return Some(self.even_norm_moment(half as usize));
        }
        None
    }

    /// Monte-Carlo estimate of `E‖X‖^r` from `draws` samples.
    pub fn estimate_norm_moment(&self, r: f64, draws: usize, seed: u64) -> f64 {
        let mut rng = substream(seed, &[self.dim as u64]);
        let mut x = vec![0.0; self.dim];
        let mut acc = 0.0;
        for _ in 0..draws {
            self.sample_into(&mut rng, &mut x);
            acc += norm(&x).powf(r);
        }
        acc / draws as f64
    }

    /// `E(Σ_c X_c²)^m` by convolving coordinate moments.
    fn even_norm_moment(&self, m: usize) -> f64 {
        let y: Vec<f64> = (0..=m).map(|j| self.coordinate_moment(2 * j)).collect();
        let mut acc = vec![0.0; m + 1];
        acc[0] = 1.0;
        for _ in 0..self.dim {
            let prev = acc.clone();
            for j in 0..=m {
                acc[j] = (0..=j)
                    .map(|l| factorial(j) / (factorial(l) * factorial(j - l)) * prev[l] * y[j - l])
                    .sum();
            }
        }
        acc[m]
    }

    /// Frobenius norm of `E[X X^T ‖X‖²]`, which is diagonal with entries `E X^4 + d - 1`.
    pub fn weighted_second_moment_norm(&self) -> f64 {
        let df = self.dim as f64;
        df.sqrt() * (self.coordinate_moment(4) + df - 1.0)
    }
}

/// Exchangeable pair `(S_n, (S_n)_t)` that swaps one uniformly chosen summand
/// for a fresh copy when both have norm at most `sqrt(n (e^{2t} - 1))`.
///
/// The state keeps `S_n` followed by all `n` summands.
#[derive(Debug, Clone)]
pub struct CltPair {
    dist: SummandDistribution,
    n: usize,
}

impl CltPair {
    pub fn new(dist: SummandDistribution, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "must be >= 1"));
        }
        if n > MAX_SUMMANDS {
            return Err(Error::SizeCap {
                what: "summands",
                size: n,
                cap: MAX_SUMMANDS,
            });
        }
        Ok(Self { dist, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The scale `s = 1/n` matching this construction.
    pub fn scale(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn threshold(&self, t: f64) -> f64 {
        (self.n as f64 * (2.0 * t).exp_m1()).sqrt()
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl PairSampler for CltPair {
    fn dim(&self) -> usize {
        self.dist.dim
    }

    fn is_exchangeable(&self) -> bool {
        true
    }

    fn draw_initial(&self, rng: &mut StreamRng, state: &mut Vec<f64>) {
        let d = self.dist.dim;
        state.clear();
        state.resize(d * (self.n + 1), 0.0);
        let (sum, xs) = state.split_at_mut(d);
        self.dist.sample_into(rng, xs);
        let c = 1.0 / (self.n as f64).sqrt();
        for x in xs.chunks(d) {
            sum.iter_mut().zip(x).for_each(|(s, v)| *s += c * v);
        }
    }

    fn draw_conditional(&self, state: &[f64], t: f64, rng: &mut StreamRng, out: &mut [f64]) {
        let d = self.dist.dim;
        out.copy_from_slice(&state[..d]);
        let i = rng.random_range(0..self.n);
        let xi = &state[d * (i + 1)..d * (i + 2)];
        let mut fresh = [0.0; 16];
        let mut heap = Vec::new();
        let xp: &mut [f64] = if d <= 16 {
            &mut fresh[..d]
        } else {
            heap.resize(d, 0.0);
            &mut heap
        };
        self.dist.sample_into(rng, xp);
        let thr = self.threshold(t);
        if norm(xp) <= thr && norm(xi) <= thr {
            let c = 1.0 / (self.n as f64).sqrt();
            for j in 0..d {
                out[j] += c * (xp[j] - xi[j]);
            }
        }
    }
}

/// Inputs to the rate expression; moments are `E‖X‖^{p+q}`, `E‖X‖^{2+m}`
/// and `‖E[X^{⊗2} ‖X‖²]‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltRateInputs {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub d: usize,
    pub moment_pq: Option<f64>,
    pub moment_2m: Option<f64>,
    pub tensor_moment: Option<f64>,
}

impl CltRateInputs {
    /// Fill the moments from the distribution's oracles, falling back to a
    /// seeded Monte-Carlo estimate where no closed form exists.
    pub fn from_distribution(dist: &SummandDistribution, n: usize, p: f64, q: f64) -> Self {
        let m = ((p + q).min(4.0) - 2.0).max(0.0);
        let moment = |r: f64| dist.norm_moment(r).or_else(|| Some(dist.estimate_norm_moment(r, 1_000_000, 0x40)));
        Self {
            n,
            p,
            q,
            d: dist.dim,
            moment_pq: moment(p + q),
            moment_2m: moment(2.0 + m),
            tensor_moment: Some(dist.weighted_second_moment_norm()),
        }
    }

    pub fn m(&self) -> f64 {
        (self.p + self.q).min(4.0) - 2.0
    }
}

/// Value of the rate expression, modulo its unknown constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltRate {
    pub value: f64,
    /// `n^{-1/2 + (2-q)/(2p)} E‖X‖^{p+q}^{1/p}`, `n^{-m/4} E‖X‖^{2+m}^{1/2}`,
    /// and for `m = 2` the `d^{1/4} ‖E[X^{⊗2}‖X‖²]‖^{1/2}` term (0 otherwise).
    pub terms: [f64; 3],
    pub m: f64,
    /// Same expression with the last term also scaled by `n^{-m/4}`.
    pub scaled_value: f64,
    /// `m < 2`: an `o(n^{-m/4})` remainder is not included.
    pub remainder_omitted: bool,
}

pub fn clt_rate_expression(inputs: &CltRateInputs) -> Result<CltRate> {
    let CltRateInputs { n, p, q, d, .. } = *inputs;
    if n == 0 {
        return Err(invalid("n", "must be >= 1"));
    }
    if !(p >= 2.0) || !p.is_finite() {
        return Err(invalid("p", format!("must be >= 2, got {p}")));
    }
    if !(0.0..=p).contains(&q) {
        return Err(invalid("q", format!("must lie in [0, p], got {q}")));
    }
    let m = inputs.m();
    let need = |v: Option<f64>, name: &'static str| -> Result<f64> {
        match v {
            Some(x) if x >= 0.0 && x.is_finite() => Ok(x),
            Some(_) => Err(invalid(name, "must be finite and >= 0")),
            None => Err(invalid(name, "moment value is missing")),
        }
    };
    let nf = n as f64;
    let a = nf.powf(-0.5 + (2.0 - q) / (2.0 * p)) * need(inputs.moment_pq, "moment_pq")?.powf(1.0 / p);
    let b = nf.powf(-m / 4.0) * need(inputs.moment_2m, "moment_2m")?.sqrt();
    let c = if m == 2.0 {
        (d as f64).powf(0.25) * need(inputs.tensor_moment, "tensor_moment")?.sqrt()
    } else {
        0.0
    };
    Ok(CltRate {
        value: a + b + c,
        terms: [a, b, c],
        m,
        scaled_value: a + b + nf.powf(-m / 4.0) * c,
        remainder_omitted: m < 2.0,
    })
}

/// `n ‖E Y‖ + n^{1/2} E[‖Y‖²]^{1/2} + n^{1/p} E[‖Y‖^p]^{1/p}`, constant taken as 1.
pub fn rosenthal_bound(n: usize, p: f64, mean_norm: f64, second_moment: f64, p_moment: f64) -> Result<f64> {
    if !(p >= 2.0) || !p.is_finite() {
        return Err(invalid("p", format!("must be >= 2, got {p}")));
    }
    for (name, v) in [("mean_norm", mean_norm), ("second_moment", second_moment), ("p_moment", p_moment)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(invalid(name, "must be finite and >= 0"));
        }
    }
    let nf = n as f64;
    Ok(nf * mean_norm + nf.sqrt() * second_moment.sqrt() + nf.powf(1.0 / p) * p_moment.powf(1.0 / p))
}

/// Empirical `W_p` between `n_samples` replicas of `S_n` and as many standard
/// Gaussian vectors, with a 50-replicate bootstrap standard error.
///
/// Every coordinate of every summand is Latin-hypercube stratified across
/// replicas, so each replica is still exactly distributed as `S_n` while the
/// cloud fills the quantiles evenly; the Gaussian cloud is stratified the same way.
pub fn clt_empirical_wp(
    dist: &SummandDistribution,
    n: usize,
    p: f64,
    n_samples: usize,
    seed: u64,
) -> Result<DistanceEstimate> {
    if n_samples < 100 {
        return Err(invalid("n_samples", format!("must be >= 100, got {n_samples}")));
    }
    if n == 0 || n > MAX_SUMMANDS {
        return Err(invalid("n", format!("must lie in 1..={MAX_SUMMANDS}")));
    }
    let d = dist.dim;
    let c = 1.0 / (n as f64).sqrt();
    let mut sums = vec![0.0; n_samples * d];
    let mut perm: Vec<usize> = (0..n_samples).collect();
    for j in 0..n {
        for k in 0..d {
            let mut rng = substream(seed, &[3, j as u64, k as u64]);
            perm.shuffle(&mut rng);
            for (r, &stratum) in perm.iter().enumerate() {
                let u = (stratum as f64 + open_unit(&mut rng)) / n_samples as f64;
                sums[r * d + k] += c * dist.quantile(u);
            }
        }
    }
    let normal = std_normal();
    let mut gauss = vec![0.0; n_samples * d];
    for k in 0..d {
        let mut rng = substream(seed, &[4, k as u64]);
        perm.shuffle(&mut rng);
        for (r, &stratum) in perm.iter().enumerate() {
            gauss[r * d + k] = normal.inverse_cdf((stratum as f64 + open_unit(&mut rng)) / n_samples as f64);
        }
    }
    let a = EmpiricalMeasure::uniform(d, sums)?;
    let b = EmpiricalMeasure::uniform(d, gauss)?;
    bootstrap_wasserstein(&a, &b, p, 50, seed ^ 0xC17, euclidean_metric)
}

/// Least-squares slope and `r²` of `log distance` against `log n`.
pub fn clt_rate_fit(ns: &[usize], distances: &[f64]) -> Result<(f64, f64)> {
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("ns", "must be strictly increasing"));
    }
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    loglog_slope(&x, distances)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stein::{conditional_moment_sq, BoundConfig, Centering, WeightMode};

    fn rad(d: usize) -> SummandDistribution {
        SummandDistribution::new(SummandKind::Rademacher, d).unwrap()
    }

    #[test]
    fn moment_oracles_match_simulation() {
        for kind in [SummandKind::Rademacher, SummandKind::Uniform, SummandKind::Exponential, SummandKind::Gaussian] {
            for d in [1usize, 3] {
                let dist = SummandDistribution::new(kind, d).unwrap();
                let mut rng = substream(7, &[d as u64]);
                let mut x = vec![0.0; d];
                let n = 400_000;
                for r in [1.0, 2.0, 3.0, 4.0] {
                    let Some(want) = dist.norm_moment(r) else { continue };
                    let mut acc = 0.0;
                    let mut acc2 = 0.0;
                    for _ in 0..n {
                        dist.sample_into(&mut rng, &mut x);
                        let v = norm(&x).powf(r);
                        acc += v;
                        acc2 += v * v;
                    }
                    let mean = acc / n as f64;
                    let se = ((acc2 / n as f64 - mean * mean).max(0.0) / n as f64).sqrt();
                    assert!((mean - want).abs() < 5.0 * se + 1e-9 * want, "{kind:?} d={d} r={r}: {mean} vs {want}");
                }
            }
        }
    }

    #[test]
    fn closed_form_moments() {
        assert!((SummandDistribution::new(SummandKind::Gaussian, 1).unwrap().norm_moment(4.0).unwrap() - 3.0).abs() < 1e-12);
        let e = SummandDistribution::new(SummandKind::Exponential, 1).unwrap();
        assert!((e.norm_moment(2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((e.norm_moment(4.0).unwrap() - 9.0).abs() < 1e-10);
        assert_eq!(rad(1).weighted_second_moment_norm(), 1.0);
        let g = SummandDistribution::new(SummandKind::Gaussian, 1).unwrap();
        assert_eq!(g.weighted_second_moment_norm(), 3.0);
    }

    #[test]
    fn rate_expression_examples() {
        let r = clt_rate_expression(&CltRateInputs::from_distribution(&rad(1), 16, 2.0, 2.0)).unwrap();
        assert!((r.value - (2.0 / 4.0 + 1.0)).abs() < 1e-12);
        let g = SummandDistribution::new(SummandKind::Gaussian, 1).unwrap();
        let r = clt_rate_expression(&CltRateInputs::from_distribution(&g, 9, 2.0, 2.0)).unwrap();
        let s3 = 3f64.sqrt();
        assert!((r.value - (2.0 * s3 / 3.0 + s3)).abs() < 1e-12);
        let r = clt_rate_expression(&CltRateInputs::from_distribution(&rad(1), 64, 2.0, 0.0)).unwrap();
        assert_eq!(r.m, 0.0);
        assert!(r.remainder_omitted);
        assert_eq!(r.terms[2], 0.0);
        assert!((r.terms[0] - 1.0).abs() < 1e-12);
        let missing = CltRateInputs { moment_pq: None, ..CltRateInputs::from_distribution(&rad(1), 4, 2.0, 2.0) };
        assert!(clt_rate_expression(&missing).is_err());
    }

    #[test]
    fn rate_expression_decreases_in_n() {
        let u = SummandDistribution::new(SummandKind::Uniform, 2).unwrap();
        for (p, q) in [(2.0, 2.0), (3.0, 1.0), (4.0, 0.5)] {
            let vals: Vec<f64> = [2usize, 8, 32, 128]
                .iter()
                .map(|&n| clt_rate_expression(&CltRateInputs::from_distribution(&u, n, p, q)).unwrap().value)
                .collect();
            assert!(vals.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn rosenthal_examples() {
        assert!((rosenthal_bound(9, 4.0, 0.0, 4.0, 16.0).unwrap() - (3.0 * 2.0 + 9f64.powf(0.25) * 2.0)).abs() < 1e-12);
        assert!((rosenthal_bound(1, 3.0, 0.5, 4.0, 8.0).unwrap() - (0.5 + 2.0 + 2.0)).abs() < 1e-12);
        // Rademacher sums at n = 32: E|ΣY|² = 32 must sit below the expression
        let mut rng = substream(11, &[]);
        let mut acc = 0.0;
        for _ in 0..20_000 {
            let s: f64 = (0..32).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).sum();
            acc += s * s;
        }
        let mc = (acc / 20_000.0).sqrt();
        assert!(rosenthal_bound(32, 2.0, 0.0, 1.0, 1.0).unwrap() >= mc);
    }

    #[test]
    fn pair_limits() {
        let pair = CltPair::new(rad(1), 8).unwrap();
        let mut rng = substream(1, &[]);
        let mut state = Vec::new();
        let mut out = [0.0];
        for _ in 0..50 {
            pair.draw_initial(&mut rng, &mut state);
            pair.draw_conditional(&state, 0.0, &mut rng, &mut out);
            assert_eq!(out[0], state[0]);
            pair.draw_conditional(&state, 50.0, &mut rng, &mut out);
            let diff = (out[0] - state[0]) * 8f64.sqrt();
            assert!([-2.0, 0.0, 2.0].iter().any(|v| (diff - v).abs() < 1e-12));
        }
    }

    #[test]
    fn pair_is_exchangeable() {
        let pair = CltPair::new(SummandDistribution::new(SummandKind::Exponential, 2).unwrap(), 8).unwrap();
        let n = 200_000;
        let mut rng = substream(3, &[]);
        let mut state = Vec::new();
        let mut xt = [0.0; 2];
        // g(X_0) h(X_t) - g(X_t) h(X_0) for g, h among coordinates and squares
        let feats = |x: &[f64]| [x[0], x[1], x[0] * x[0], x[1] * x[1]];
        let mut acc = vec![(0.0, 0.0); 16];
        for _ in 0..n {
            pair.draw_initial(&mut rng, &mut state);
            pair.draw_conditional(&state, 0.3, &mut rng, &mut xt);
            let (a, b) = (feats(&state[..2]), feats(&xt));
            for i in 0..4 {
                for j in 0..4 {
                    let v = a[i] * b[j] - b[i] * a[j];
                    acc[i * 4 + j].0 += v;
                    acc[i * 4 + j].1 += v * v;
                }
            }
        }
        for (s, s2) in acc {
            let mean = s / n as f64;
            let se = ((s2 / n as f64 - mean * mean).max(0.0) / n as f64).sqrt();
            assert!(mean.abs() <= 4.0 * se + 1e-12);
        }
    }

    #[test]
    fn first_order_mismatch_vanishes_for_large_t() {
        for kind in [SummandKind::Rademacher, SummandKind::Gaussian] {
            let pair = CltPair::new(SummandDistribution::new(kind, 1).unwrap(), 16).unwrap();
            let cfg = BoundConfig {
                n_outer: 4000,
                replicates: 8,
                ..BoundConfig::default()
            };
            let e = conditional_moment_sq(&pair, 10.0, 1, Centering::Gaussian { s: pair.scale() }, WeightMode::Euclidean, &cfg)
                .unwrap();
            assert!(e.value.abs() < 3.0 * e.stderr, "{kind:?}: {e:?}");
        }
    }

    #[test]
    fn empirical_distance_single_rademacher() {
        // W_2(±1, γ)² = E(sign Z - Z)² = 2 - 2 sqrt(2/π)
        let want = (2.0 - 2.0 * (2.0 / std::f64::consts::PI).sqrt()).sqrt();
        for seed in [1, 2] {
            let e = clt_empirical_wp(&rad(1), 1, 2.0, 2000, seed).unwrap();
            assert!((e.distance - want).abs() < 0.01, "{e:?}");
            assert!(e.stderr > 0.0);
        }
    }

    #[test]
    fn gaussian_summands_sit_at_the_noise_floor() {
        let g = SummandDistribution::new(SummandKind::Gaussian, 1).unwrap();
        let e = clt_empirical_wp(&g, 16, 2.0, 2000, 5).unwrap();
        let r = clt_empirical_wp(&rad(1), 16, 2.0, 2000, 5).unwrap();
        assert!(e.distance >= 0.0 && e.distance < r.distance);
        assert!(clt_empirical_wp(&g, 4, 2.0, 50, 1).is_err());
    }

    #[test]
    fn multivariate_empirical_distance() {
        let e = clt_empirical_wp(&rad(2), 4, 2.0, 300, 9).unwrap();
        assert!(e.distance > 0.0 && e.distance.is_finite());
    }

    #[test]
    fn rate_fit() {
        let ns = [4usize, 16, 64, 256];
        let half: Vec<f64> = ns.iter().map(|&n| 2.0 * (n as f64).powf(-0.5)).collect();
        let (s, r2) = clt_rate_fit(&ns, &half).unwrap();
        assert!((s + 0.5).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
        let one: Vec<f64> = ns.iter().map(|&n| 3.0 / n as f64).collect();
        assert!((clt_rate_fit(&ns, &one).unwrap().0 + 1.0).abs() < 1e-12);
        assert!(clt_rate_fit(&ns, &[1.0, 0.0, 1.0, 1.0]).is_err());
    }
}
