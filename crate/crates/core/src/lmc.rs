//! Coordinate-wise Langevin sampling.
//!
//! One step picks a coordinate `I` uniformly and a Rademacher sign `B`, then
//! moves `x_I -= h ∂_I u(x) - sqrt(2h) B`. Euler–Maruyama is the full-vector
//! baseline.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{substream, StreamRng};
use crate::stats::ols;
use crate::stein::{DiffusionSpec, KernelMoments};
use crate::tensor::SymmetricTensor;
use crate::transport::{bootstrap_wasserstein, euclidean_metric, DistanceEstimate, EmpiricalMeasure};

/// Potential `u` with per-coordinate strong convexity `rho` and Lipschitz
/// constant `lipschitz` for the partial derivatives.
pub trait Potential: Sync {
    fn dim(&self) -> usize;

    fn name(&self) -> &str;

    fn value(&self, x: &[f64]) -> f64;

    fn partial(&self, x: &[f64], i: usize) -> f64;

    fn rho(&self) -> f64;

    fn lipschitz(&self) -> f64;

    fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.partial(x, i);
        }
    }

    /// Direct draw from `e^{-u}` when one is available.
    fn sample_exact(&self, _rng: &mut StreamRng, _out: &mut [f64]) -> bool {
        false
    }
}

/// `u = ‖x‖²/2`.
#[derive(Debug, Clone, Copy)]
pub struct StandardGaussian {
    pub dim: usize,
}

impl Potential for StandardGaussian {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &str {
        "standard_gaussian"
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>() / 2.0
    }

    fn partial(&self, x: &[f64], i: usize) -> f64 {
        x[i]
    }

    fn rho(&self) -> f64 {
        1.0
    }

    fn lipschitz(&self) -> f64 {
        1.0
    }

    fn sample_exact(&self, rng: &mut StreamRng, out: &mut [f64]) -> bool {
        out.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        true
    }
}

/// `u = Σ x_i²/2 + log cosh x_i`; `u_i'' = 1 + sech² ∈ (1, 2]`.
#[derive(Debug, Clone, Copy)]
pub struct LogCosh {
    pub dim: usize,
}

impl Potential for LogCosh {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &str {
        "log_cosh"
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v * v / 2.0 + v.cosh().ln()).sum()
    }

    fn partial(&self, x: &[f64], i: usize) -> f64 {
        x[i] + x[i].tanh()
    }

    fn rho(&self) -> f64 {
        1.0
    }

    fn lipschitz(&self) -> f64 {
        2.0
    }
}

/// Probe `∇u(0) = 0`, per-coordinate monotonicity `>= rho` and the
/// Lipschitz bound on random pairs differing in one coordinate.
pub fn validate_potential<P: Potential + ?Sized>(pot: &P, probes: usize, seed: u64) -> Result<()> {
    let d = pot.dim();
    if d == 0 {
        return Err(invalid("d", "must be >= 1"));
    }
    let (rho, l) = (pot.rho(), pot.lipschitz());
    if !(rho > 0.0) || !(l >= rho) || !l.is_finite() {
        return Err(invalid("rho", format!("need 0 < rho <= L, got rho = {rho}, L = {l}")));
    }
    let mut g = vec![0.0; d];
    pot.grad_into(&vec![0.0; d], &mut g);
    if g.iter().any(|v| v.abs() > 1e-10) {
        return Err(Error::Potential("gradient at 0 is not 0".into()));
    }
    let mut rng = substream(seed, &[9]);
    let mut x = vec![0.0; d];
    for _ in 0..probes {
        x.iter_mut().for_each(|v| *v = 6.0 * (rng.random::<f64>() - 0.5));
        let i = rng.random_range(0..d);
        let mut y = x.clone();
        y[i] += 4.0 * (rng.random::<f64>() - 0.5);
        let dx = y[i] - x[i];
        if dx == 0.0 {
            continue;
        }
        let dg = pot.partial(&y, i) - pot.partial(&x, i);
        let tol = 1e-12 * (1.0 + dx * dx);
        if dg * dx < rho * dx * dx - tol {
            return Err(Error::Potential(format!("coordinate {i} is not {rho}-monotone")));
        }
        if dg * dg > l * l * dx * dx + tol {
            return Err(Error::Potential(format!("coordinate {i} partial is not {l}-Lipschitz")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainState {
    pub x: Vec<f64>,
    pub steps: u64,
    pub h: f64,
}

impl ChainState {
    pub fn at_origin(dim: usize, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(invalid("h", format!("must be positive, got {h}")));
        }
        Ok(Self {
            x: vec![0.0; dim],
            steps: 0,
            h,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Coordinate,
    EulerMaruyama,
}

/// Coordinate draw first, then the sign, from the same stream.
pub fn coordinate_step<P: Potential + ?Sized>(state: &mut ChainState, pot: &P, rng: &mut StreamRng) {
    let d = state.x.len();
    let i = rng.random_range(0..d);
    let b = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let h = state.h;
    let g = pot.partial(&state.x, i);
    state.x[i] += -h * g + (2.0 * h).sqrt() * b;
    state.steps += 1;
}

pub fn euler_maruyama_step<P: Potential + ?Sized>(state: &mut ChainState, pot: &P, rng: &mut StreamRng, grad: &mut [f64]) {
    let h = state.h;
    pot.grad_into(&state.x, grad);
    let c = (2.0 * h).sqrt();
    for (x, g) in state.x.iter_mut().zip(grad.iter()) {
        let z: f64 = rng.sample(StandardNormal);
        *x += -h * g + c * z;
    }
    state.steps += 1;
}

fn step<P: Potential + ?Sized>(scheme: Scheme, state: &mut ChainState, pot: &P, rng: &mut StreamRng, grad: &mut [f64]) {
    match scheme {
        Scheme::Coordinate => coordinate_step(state, pot, rng),
        Scheme::EulerMaruyama => euler_maruyama_step(state, pot, rng, grad),
    }
}

/// `E‖X‖² <= 2dh / (ρ(2h - L²h²))` at stationarity.
pub fn stationary_second_moment_bound(d: usize, h: f64, rho: f64, l: f64) -> Result<f64> {
    if !(h > 0.0) || !(rho > 0.0) {
        return Err(invalid("h", "h and rho must be positive"));
    }
    let den = 2.0 * h - l * l * h * h;
    if !(den > 0.0) {
        return Err(invalid("h", format!("need h < 2/L² = {}", 2.0 / (l * l))));
    }
    Ok(2.0 * d as f64 * h / (rho * den))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupNormBound {
    /// `sqrt(2h) / (1 - sqrt(1 - 2hρ + h²L²))`.
    pub exact: f64,
    /// `2 / (hρ)`, the small-`h` simplification as printed.
    pub simplified: f64,
}

pub fn sup_norm_bound(h: f64, rho: f64, l: f64) -> Result<SupNormBound> {
    if !(h > 0.0) || !(rho > 0.0) {
        return Err(invalid("h", "h and rho must be positive"));
    }
    let rad = 1.0 - 2.0 * h * rho + h * h * l * l;
    if !(0.0..1.0).contains(&rad) {
        return Err(invalid("h", format!("1 - 2h rho + h² L² = {rad} must lie in [0, 1)")));
    }
    Ok(SupNormBound {
        exact: (2.0 * h).sqrt() / (1.0 - rad.sqrt()),
        simplified: 2.0 / (h * rho),
    })
}

/// Per-step factor `1 + (L²h² - 2ρh)/d` on the squared `W_2` distance.
pub fn contraction_factor(d: usize, h: f64, rho: f64, l: f64) -> Result<f64> {
    if d == 0 || !(h > 0.0) || !(rho > 0.0) {
        return Err(invalid("h", "need d >= 1 and positive h, rho"));
    }
    if !(h < 2.0 * rho / (l * l)) {
        return Err(invalid("h", format!("need h < 2 rho/L² = {} for contraction", 2.0 * rho / (l * l))));
    }
    Ok(1.0 + (l * l * h * h - 2.0 * rho * h) / d as f64)
}

/// Langevin diffusion for `e^{-u}`.
pub fn langevin_spec<P: Potential + Clone + Send + 'static>(pot: &P) -> Result<DiffusionSpec> {
    let p = pot.clone();
    DiffusionSpec::langevin(pot.name().to_string(), pot.dim(), move |x, out| p.grad_into(x, out), pot.rho())
}

/// Increment moments of the coordinate step:
/// `m_k(x) = (1/d) Σ_i ((a_i + c)^k + (a_i - c)^k)/2 e_i^{⊗k}` with
/// `a_i = -h ∂_i u(x)` and `c = sqrt(2h)`.
pub struct CoordinateKernel<'a, P: ?Sized> {
    pub potential: &'a P,
    pub h: f64,
}

impl<P: Potential + ?Sized> KernelMoments for CoordinateKernel<'_, P> {
    fn dim(&self) -> usize {
        self.potential.dim()
    }

    fn moment(&self, x: &[f64], k: usize) -> SymmetricTensor {
        let d = self.potential.dim();
        let c = (2.0 * self.h).sqrt();
        let mut t = SymmetricTensor::zeros(k, d).expect("moment tensor fits the size cap");
        // flat index of e_i^{⊗k} is i (1 + d + ... + d^{k-1})
        let stride: usize = (0..k).map(|j| d.pow(j as u32)).sum();
        for i in 0..d {
            let a = -self.h * self.potential.partial(x, i);
            t.data_mut()[i * stride] = ((a + c).powi(k as i32) + (a - c).powi(k as i32)) / (2.0 * d as f64);
        }
        t
    }
}

fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 64 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentResult {
    pub scheme: Scheme,
    pub d: usize,
    pub h: f64,
    pub chains: usize,
    pub steps: usize,
    /// Mean of `‖X‖²` over the second half of every chain.
    pub second_moment: f64,
    /// Standard error across chains.
    pub stderr: f64,
    pub bound: Option<f64>,
    pub sup_bound: Option<SupNormBound>,
    /// Largest `|X_i|` seen on any chain.
    pub max_abs: f64,
    pub warnings: Vec<String>,
    /// Positions at the end of every chain.
    pub final_positions: Vec<Vec<f64>>,
}

/// Run `chains` chains from 0 for `steps` steps; the first half is burn-in.
///
/// The sup-norm bound is asserted along the coordinate chains: a violation is an error.
pub fn stationary_moment_experiment<P: Potential + ?Sized>(
    pot: &P,
    scheme: Scheme,
    h: f64,
    chains: usize,
    steps: usize,
    seed: u64,
) -> Result<MomentResult> {
    if chains < 2 {
        return Err(invalid("chains", "need at least 2 chains"));
    }
    if steps < 4 {
        return Err(invalid("steps", "need at least 4 steps"));
    }
    let d = pot.dim();
    let (rho, l) = (pot.rho(), pot.lipschitz());
    let sup = sup_norm_bound(h, rho, l).ok();
    let monitor = if scheme == Scheme::Coordinate { sup.map(|s| s.exact) } else { None };
    let burn = steps / 2;
    let kept = steps - burn;
    let per_chain: Vec<(f64, f64, f64, f64, Vec<f64>)> = (0..chains)
        .into_par_iter()
        .map(|c| -> Result<_> {
            let mut rng = substream(seed, &[7, c as u64]);
            let mut st = ChainState::at_origin(d, h)?;
            let mut grad = vec![0.0; d];
            let mut blocks = Vec::with_capacity(kept / 4096 + 2);
            let mut halves = [Vec::new(), Vec::new()];
            let mut block = 0.0;
            let mut max_abs = 0.0f64;
            for n in 0..steps {
                step(scheme, &mut st, pot, &mut rng, &mut grad);
                for &v in &st.x {
                    max_abs = max_abs.max(v.abs());
                }
                if let Some(b) = monitor {
                    if max_abs > b {
                        return Err(Error::Potential(format!(
                            "sup-norm bound {b} exceeded ({max_abs}) on chain {c} at step {n}"
                        )));
                    }
                }
                if !st.x.iter().all(|v| v.is_finite()) {
                    return Err(Error::NonFinite("chain state"));
                }
                if n >= burn {
                    block += st.x.iter().map(|v| v * v).sum::<f64>();
                    if (n - burn + 1) % 4096 == 0 {
                        blocks.push(block);
                        halves[usize::from(n - burn >= kept / 2)].push(block);
                        block = 0.0;
                    }
                }
            }
            blocks.push(block);
            let mean = pairwise_sum(&blocks) / kept as f64;
            let half_mean = |v: &Vec<f64>| if v.is_empty() { mean } else { pairwise_sum(v) / (v.len() * 4096) as f64 };
            Ok((mean, half_mean(&halves[0]), half_mean(&halves[1]), max_abs, st.x))
        })
        .collect::<Result<_>>()?;
    let means: Vec<f64> = per_chain.iter().map(|r| r.0).collect();
    let (second_moment, stderr) = crate::stats::mean_stderr(&means);
    let diffs: Vec<f64> = per_chain.iter().map(|r| r.1 - r.2).collect();
    let (dm, dse) = crate::stats::mean_stderr(&diffs);
    let mut warnings = Vec::new();
    if dse > 0.0 && dm.abs() > 4.0 * dse {
        warnings.push(format!("first and second halves differ by {dm:e} (> 4 sigma); chains may not be stationary"));
    }
    Ok(MomentResult {
        scheme,
        d,
        h,
        chains,
        steps,
        second_moment,
        stderr,
        bound: stationary_second_moment_bound(d, h, rho, l).ok(),
        sup_bound: sup,
        max_abs: per_chain.iter().map(|r| r.3).fold(0.0, f64::max),
        warnings,
        final_positions: per_chain.into_iter().map(|r| r.4).collect(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionResult {
    pub d: usize,
    pub h: f64,
    /// Mean one-step ratio `‖x' - y'‖² / ‖x - y‖²`.
    pub measured: f64,
    pub stderr: f64,
    pub predicted: f64,
    pub trials: usize,
}

/// Synchronously coupled single steps (shared coordinate and sign) from
/// independent Gaussian starting pairs.
pub fn contraction_experiment<P: Potential + ?Sized>(pot: &P, h: f64, trials: usize, seed: u64) -> Result<ContractionResult> {
    let d = pot.dim();
    let predicted = contraction_factor(d, h, pot.rho(), pot.lipschitz())?;
    if trials < 2 {
        return Err(invalid("trials", "need at least 2 trials"));
    }
    let ratios: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(seed, &[8, t as u64]);
            let mut x = ChainState::at_origin(d, h).expect("h checked");
            let mut y = x.clone();
            for v in x.x.iter_mut().chain(y.x.iter_mut()) {
                *v = rng.sample(StandardNormal);
            }
            let before: f64 = x.x.iter().zip(&y.x).map(|(a, b)| (a - b).powi(2)).sum();
            let mut shared = rng.clone();
            coordinate_step(&mut x, pot, &mut rng);
            coordinate_step(&mut y, pot, &mut shared);
            let after: f64 = x.x.iter().zip(&y.x).map(|(a, b)| (a - b).powi(2)).sum();
            after / before
        })
        .collect();
    let (measured, stderr) = crate::stats::mean_stderr(&ratios);
    Ok(ContractionResult {
        d,
        h,
        measured,
        stderr,
        predicted,
        trials,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityConfig {
    pub dims: Vec<usize>,
    pub eps: Vec<f64>,
    /// `h = h_const ε² / d^{h_dim_power}`.
    pub h_const: f64,
    pub h_dim_power: f64,
    pub chains: usize,
    /// Largest step count tried per cell.
    pub max_steps: usize,
    /// Geometric checkpoints between 1 and `max_steps`.
    pub checkpoints: usize,
    pub seed: u64,
}

impl Default for ComplexityConfig {
    fn default() -> Self {
        Self {
            dims: vec![1, 2, 4],
            eps: vec![0.3, 0.4, 0.6],
            h_const: 0.5,
            h_dim_power: 1.0,
            chains: 400,
            max_steps: 20_000,
            checkpoints: 24,
            seed: crate::rng::DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckpointRow {
    pub steps: usize,
    pub w2: DistanceEstimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplexityCell {
    pub d: usize,
    pub eps: f64,
    pub h: f64,
    /// First checkpoint with `W_2 <= ε`; `None` if the budget ran out.
    pub n_star: Option<usize>,
    pub trace: Vec<CheckpointRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplexityReport {
    pub cells: Vec<ComplexityCell>,
    /// Fit `log n* = a + b log d + c log ε` over cells that reached ε.
    pub exponent_d: Option<f64>,
    pub exponent_eps: Option<f64>,
    pub r2: Option<f64>,
    /// Step size of the reference chains when no exact sampler exists.
    pub reference_h: Option<f64>,
    pub notes: Vec<String>,
}

fn checkpoints(max: usize, count: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..count)
        .map(|j| (max as f64).powf(j as f64 / (count - 1).max(1) as f64).round() as usize)
        .collect();
    out.insert(0, 0);
    out.dedup();
    out
}

fn reference_cloud<P: Potential + ?Sized>(pot: &P, n: usize, h: f64, steps: usize, seed: u64) -> Result<(Vec<f64>, Option<f64>)> {
    let d = pot.dim();
    let mut probe = substream(seed, &[10, 0]);
    let mut buf = vec![0.0; d];
    if pot.sample_exact(&mut probe, &mut buf) {
        let pts = (0..n)
            .flat_map(|i| {
                let mut rng = substream(seed, &[10, i as u64]);
                let mut x = vec![0.0; d];
                pot.sample_exact(&mut rng, &mut x);
                x
            })
            .collect();
        return Ok((pts, None));
    }
    // 10x smaller step, 10x longer run
    let href = h / 10.0;
    let pts: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let mut rng = substream(seed, &[11, i as u64]);
            let mut st = ChainState::at_origin(d, href)?;
            let mut g = vec![0.0; d];
            for _ in 0..10 * steps.max(1) {
                euler_maruyama_step(&mut st, pot, &mut rng, &mut g);
            }
            Ok(st.x)
        })
        .collect::<Result<_>>()?;
    Ok((pts.concat(), Some(href)))
}

/// Smallest step count reaching `W_2(ν_n, μ) <= ε` on a grid of `(d, ε)`,
/// with `h` tied to `(d, ε)` as in the complexity statement, and the fitted
/// exponents of `n*` in `d` and `ε`.
///
/// `make` builds the potential for each dimension. Fails only when no cell
/// reaches its tolerance within `max_steps`.
pub fn lmc_complexity_experiment<P, F>(make: F, cfg: &ComplexityConfig) -> Result<ComplexityReport>
where
    P: Potential,
    F: Fn(usize) -> P,
{
    if cfg.dims.is_empty() || cfg.eps.is_empty() {
        return Err(invalid("dims", "need at least one dimension and one tolerance"));
    }
    if cfg.eps.iter().any(|e| !(*e > 0.0)) || !(cfg.h_const > 0.0) {
        return Err(invalid("eps", "tolerances and h_const must be positive"));
    }
    if cfg.chains < 10 || cfg.max_steps == 0 || cfg.checkpoints < 2 {
        return Err(invalid("chains", "need chains >= 10, max_steps >= 1, checkpoints >= 2"));
    }
    let marks = checkpoints(cfg.max_steps, cfg.checkpoints);
    let mut cells = Vec::new();
    let mut reference_h = None;
    for (di, &d) in cfg.dims.iter().enumerate() {
        let pot = make(d);
        if pot.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: pot.dim() });
        }
        for (ei, &eps) in cfg.eps.iter().enumerate() {
            let h = cfg.h_const * eps * eps / (d as f64).powf(cfg.h_dim_power);
            let cell_seed = crate::rng::stream_key(cfg.seed, &[12, di as u64, ei as u64]);
            let (refpts, href) = reference_cloud(&pot, cfg.chains, h, cfg.max_steps, cell_seed)?;
            reference_h = reference_h.or(href);
            let target = EmpiricalMeasure::uniform(d, refpts)?;
            let mut states: Vec<(ChainState, StreamRng)> = (0..cfg.chains)
                .map(|c| Ok((ChainState::at_origin(d, h)?, substream(cell_seed, &[13, c as u64]))))
                .collect::<Result<_>>()?;
            let mut trace = Vec::with_capacity(marks.len());
            let mut n_star = None;
            let mut done = 0;
            for &m in &marks {
                states.par_iter_mut().for_each(|(st, rng)| {
                    for _ in done..m {
                        coordinate_step(st, &pot, rng);
                    }
                });
                done = m;
                let cloud = EmpiricalMeasure::uniform(d, states.iter().flat_map(|s| s.0.x.iter().copied()).collect())?;
                let w2 = bootstrap_wasserstein(&cloud, &target, 2.0, 20, cell_seed ^ m as u64, euclidean_metric)?;
                let hit = w2.distance <= eps;
                trace.push(CheckpointRow { steps: m, w2 });
                if hit {
                    n_star = Some(m);
                    break;
                }
            }
            cells.push(ComplexityCell { d, eps, h, n_star, trace });
        }
    }
    let reached: Vec<&ComplexityCell> = cells.iter().filter(|c| c.n_star.is_some_and(|n| n > 0)).collect();
    if reached.is_empty() {
        return Err(Error::BudgetExhausted(format!("no (d, eps) cell reached its tolerance within {} steps", cfg.max_steps)));
    }
    let mut notes = Vec::new();
    let exhausted = cells.iter().filter(|c| c.n_star.is_none()).count();
    if exhausted > 0 {
        notes.push(format!("{exhausted} cell(s) exhausted the step budget and are left out of the fit"));
    }
    let (mut exponent_d, mut exponent_eps, mut r2) = (None, None, None);
    let vary_d = cfg.dims.len() > 1;
    let vary_e = cfg.eps.len() > 1;
    let rows: Vec<Vec<f64>> = reached
        .iter()
        .map(|c| {
            let mut r = Vec::new();
            if vary_d {
                r.push((c.d as f64).ln());
            }
            if vary_e {
                r.push(c.eps.ln());
            }
            r
        })
        .collect();
    let y: Vec<f64> = reached.iter().map(|c| (c.n_star.unwrap() as f64).ln()).collect();
    let params = usize::from(vary_d) + usize::from(vary_e);
    if params > 0 && reached.len() > params + 1 {
        if let Ok((coef, fit_r2)) = ols(&rows, &y) {
            let mut j = 1;
            if vary_d {
                exponent_d = Some(coef[j]);
                j += 1;
            }
            if vary_e {
                exponent_eps = Some(coef[j]);
            }
            r2 = Some(fit_r2);
        } else {
            notes.push("exponent fit is degenerate".into());
        }
    } else {
        notes.push("too few cells reached their tolerance to fit exponents".into());
    }
    if let Some(hr) = reference_h {
        notes.push(format!("reference clouds come from Euler–Maruyama chains at h = {hr:e}; their O(h) bias is not removed"));
    }
    Ok(ComplexityReport {
        cells,
        exponent_d,
        exponent_eps,
        r2,
        reference_h,
        notes,
    })
}
