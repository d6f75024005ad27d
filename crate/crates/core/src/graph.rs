//! Random walks on k-nearest-neighbour graphs of the flat torus `[0,1)^d`.

use std::f64::consts::PI;
use std::io::{self, Write};
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::rng::{substream, StreamRng};
use crate::transport::{wasserstein_exact_with, EmpiricalMeasure};

/// Above this many points neighbour search goes through a bucket grid.
pub const GRID_THRESHOLD: usize = 5000;

/// Euclidean length of the wrapped difference, each component in `[-1/2, 1/2)`.
pub fn torus_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let d = a - b;
            let w = d - (d + 0.5).floor();
            w * w
        })
        .sum::<f64>()
        .sqrt()
}

type DensityFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Positive density on the torus with a known maximum.
#[derive(Clone)]
pub struct TorusDensity {
    f: Arc<DensityFn>,
    max: f64,
    /// `max` bounds each coordinate factor of a product density.
    per_coordinate: bool,
    name: String,
}

impl std::fmt::Debug for TorusDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TorusDensity").field("name", &self.name).field("max", &self.max).finish()
    }
}

impl TorusDensity {
    pub fn new(name: impl Into<String>, max: f64, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(max > 0.0) || !max.is_finite() {
            return Err(invalid("max", "density bound must be positive"));
        }
        Ok(Self {
            f: Arc::new(f),
            max,
            per_coordinate: false,
            name: name.into(),
        })
    }

    pub fn uniform() -> Self {
        Self::new("uniform", 1.0, |_| 1.0).expect("static density")
    }

    /// `∏_i (1 + a cos(2π x_i))` for `0 <= a < 1`.
    pub fn cosine(amplitude: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&amplitude) {
            return Err(invalid("amplitude", "must lie in [0, 1)"));
        }
        let a = amplitude;
        let mut f = Self::new(format!("cosine({a})"), 1.0 + a, move |x| {
            x.iter().map(|v| 1.0 + a * (2.0 * PI * v).cos()).product()
        })?;
        f.per_coordinate = true;
        Ok(f)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    /// Upper bound of the density in dimension `d`.
    pub fn max_in(&self, d: usize) -> f64 {
        if self.per_coordinate {
            self.max.powi(d as i32)
        } else {
            self.max
        }
    }
}

/// Points on the torus, flat row-major.
#[derive(Debug, Clone, Serialize)]
pub struct TorusCloud {
    dim: usize,
    points: Vec<f64>,
}

impl TorusCloud {
    pub fn new(dim: usize, points: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("d", "must be >= 1"));
        }
        if points.is_empty() || points.len() % dim != 0 {
            return Err(invalid("points", "length must be a positive multiple of d"));
        }
        if points.iter().any(|v| !(0.0..1.0).contains(v)) {
            return Err(invalid("points", "coordinates must lie in [0, 1)"));
        }
        Ok(Self { dim, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }
}

/// Distance from point `i` to its `k`-th nearest sample; the point itself counts.
pub fn knn_radius(cloud: &TorusCloud, i: usize, k: usize) -> Result<f64> {
    let n = cloud.len();
    if k == 0 || k > n {
        return Err(invalid("k", format!("must lie in 1..={n}, got {k}")));
    }
    if i >= n {
        return Err(invalid("i", format!("vertex {i} out of range")));
    }
    let x = cloud.point(i);
    let mut d: Vec<f64> = (0..n).map(|j| torus_distance(x, cloud.point(j))).collect();
    let (_, kth, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*kth)
}

/// Directed k-NN graph with the uniform walk over out-neighbours.
#[derive(Debug, Clone, Serialize)]
pub struct WalkGraph {
    neighbors: Vec<Vec<usize>>,
    radii: Vec<f64>,
}

impl WalkGraph {
    /// Graph from explicit out-neighbour lists (radii unset).
    pub fn from_neighbors(neighbors: Vec<Vec<usize>>) -> Result<Self> {
        let n = neighbors.len();
        if n == 0 {
            return Err(Error::Empty("graph"));
        }
        for (i, row) in neighbors.iter().enumerate() {
            if row.is_empty() {
                return Err(invalid("neighbors", format!("vertex {i} has no out-neighbours")));
            }
            if row.iter().any(|&j| j >= n) {
                return Err(invalid("neighbors", format!("vertex {i} points outside the graph")));
            }
        }
        Ok(Self {
            radii: vec![f64::NAN; n],
            neighbors,
        })
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Transition probability from `i` to each out-neighbour.
    pub fn weight(&self, i: usize) -> f64 {
        1.0 / self.neighbors[i].len() as f64
    }

    /// One `vertex_i vertex_j weight` line per edge.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (i, row) in self.neighbors.iter().enumerate() {
            let p = self.weight(i);
            for &j in row {
                writeln!(w, "{i} {j} {p:e}")?;
            }
        }
        Ok(())
    }

    fn in_neighbors(&self) -> Vec<Vec<usize>> {
        let mut inn = vec![Vec::new(); self.len()];
        for (i, row) in self.neighbors.iter().enumerate() {
            for &j in row {
                inn[j].push(i);
            }
        }
        inn
    }
}

struct Grid {
    m: usize,
    h: f64,
    dim: usize,
    cells: Vec<Vec<usize>>,
}

impl Grid {
    fn new(cloud: &TorusCloud) -> Self {
        let n = cloud.len();
        let dim = cloud.dim;
        let mut m = ((n as f64 / 2.0).powf(1.0 / dim as f64).floor() as usize).max(1);
        while m > 1 && m.pow(dim as u32) > 4 * n {
            m -= 1;
        }
        let mut cells = vec![Vec::new(); m.pow(dim as u32)];
        for i in 0..n {
            cells[Self::cell_of(cloud.point(i), m)].push(i);
        }
        Self { m, h: 1.0 / m as f64, dim, cells }
    }

    fn coords(x: &[f64], m: usize) -> Vec<usize> {
        x.iter().map(|v| ((v * m as f64) as usize).min(m - 1)).collect()
    }

    fn cell_of(x: &[f64], m: usize) -> usize {
        Self::coords(x, m).iter().fold(0, |acc, c| acc * m + c)
    }

    /// Cells at Chebyshev offset exactly `ring` from `base`, deduplicated via `stamp`.
    fn shell(&self, base: &[usize], ring: usize, stamp: &mut [usize], mark: usize, out: &mut Vec<usize>) {
        let m = self.m as i64;
        let r = ring as i64;
        let side = 2 * r + 1;
        let total = side.pow(self.dim as u32);
        for code in 0..total {
            let mut c = code;
            let mut idx = 0i64;
            let mut on_shell = false;
            for &b in base {
                let off = c % side - r;
                c /= side;
                on_shell |= off.abs() == r;
                idx = idx * m + (b as i64 + off).rem_euclid(m);
            }
            let idx = idx as usize;
            if on_shell && stamp[idx] != mark {
                stamp[idx] = mark;
                out.push(idx);
            }
        }
    }
}

/// Out-neighbours `{j != i : d_T(x_i, x_j) <= r_k(x_i)}` with `r_k` the
/// self-inclusive k-NN radius; uniform transition weights.
pub fn build_walk_graph(cloud: &TorusCloud, k: usize) -> Result<WalkGraph> {
    let n = cloud.len();
    if k < 2 {
        return Err(invalid("k", format!("must be >= 2, got {k}")));
    }
    if k > n {
        return Err(invalid("k", format!("must be <= n = {n}, got {k}")));
    }
    let rows: Vec<(f64, Vec<usize>)> = if n > GRID_THRESHOLD {
        let grid = Grid::new(cloud);
        (0..n)
            .into_par_iter()
            .map_init(
                || (vec![usize::MAX; grid.cells.len()], Vec::new(), Vec::new()),
                |(stamp, shell, cand), i| {
                    let x = cloud.point(i);
                    let base = Grid::coords(x, grid.m);
                    cand.clear();
                    let max_ring = grid.m / 2 + 1;
                    for ring in 0..=max_ring {
                        shell.clear();
                        grid.shell(&base, ring, stamp, i, shell);
                        for &c in shell.iter() {
                            cand.extend(grid.cells[c].iter().map(|&j| (torus_distance(x, cloud.point(j)), j)));
                        }
                        if cand.len() >= k {
                            let mut ds: Vec<f64> = cand.iter().map(|c| c.0).collect();
                            let (_, r, _) = ds.select_nth_unstable_by(k - 1, f64::total_cmp);
                            if *r < ring as f64 * grid.h || ring == max_ring {
                                let r = *r;
                                let mut nb: Vec<usize> =
                                    cand.iter().filter(|&&(d, j)| j != i && d <= r).map(|c| c.1).collect();
                                nb.sort_unstable();
                                return (r, nb);
                            }
                        }
                    }
                    unreachable!("the last ring covers every cell")
                },
            )
            .collect()
    } else {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let x = cloud.point(i);
                let d: Vec<f64> = (0..n).map(|j| torus_distance(x, cloud.point(j))).collect();
                let mut ds = d.clone();
                let (_, r, _) = ds.select_nth_unstable_by(k - 1, f64::total_cmp);
                let r = *r;
                let nb = (0..n).filter(|&j| j != i && d[j] <= r).collect();
                (r, nb)
            })
            .collect()
    };
    let (radii, neighbors): (Vec<f64>, Vec<Vec<usize>>) = rows.into_iter().unzip();
    assert!(neighbors.iter().all(|r| r.len() + 1 >= k), "k-th neighbour includes self");
    Ok(WalkGraph { neighbors, radii })
}

/// Left fixed point of the walk.
#[derive(Debug, Clone, Serialize)]
pub struct Stationary {
    pub weights: Vec<f64>,
    pub iterations: usize,
    /// `‖πK - π‖_1` at exit.
    pub residual: f64,
}

fn reach(adj: &[Vec<usize>]) -> usize {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count
}

/// Power iteration `π <- πK` from the uniform vector until `‖πK - π‖_1 <= tol`.
pub fn stationary_measure(graph: &WalkGraph, tol: f64, max_iter: usize) -> Result<Stationary> {
    let n = graph.len();
    if !(tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    let inn = graph.in_neighbors();
    for adj in [&graph.neighbors, &inn] {
        let reached = reach(adj);
        if reached < n {
            return Err(Error::Disconnected { reached, total: n });
        }
    }
    let w: Vec<f64> = (0..n).map(|i| graph.weight(i)).collect();
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 0..=max_iter {
        next.par_iter_mut().enumerate().for_each(|(j, v)| {
            *v = inn[j].iter().map(|&i| pi[i] * w[i]).sum();
        });
        residual = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        if residual <= tol {
            return Ok(Stationary {
                weights: pi,
                iterations: it,
                residual,
            });
        }
        let s: f64 = next.iter().sum();
        std::mem::swap(&mut pi, &mut next);
        pi.iter_mut().for_each(|v| *v /= s);
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual,
    })
}

/// Walk scale `s = (k/n)^{2/d} V_2 / V_0^{1+2/d}` with `V_0` the unit-ball
/// volume and `V_2 = ∫_{‖x‖<=1} x_1² dx = V_0/(d+2)`.
pub fn knn_step_scale(k: usize, n: usize, d: usize) -> Result<f64> {
    if d == 0 || n == 0 || k == 0 || k > n {
        return Err(invalid("k", "need 1 <= k <= n and d >= 1"));
    }
    let df = d as f64;
    let v0 = PI.powf(df / 2.0) / gamma(df / 2.0 + 1.0);
    let v2 = v0 / (df + 2.0);
    Ok((k as f64 / n as f64).powf(2.0 / df) * v2 / v0.powf(1.0 + 2.0 / df))
}

/// `sqrt(log n) n^{1/d} / k^{1/2+1/d} + (k/n)^{1/d}`, the rate shape with unit constant.
pub fn bound_shape(n: usize, k: usize, d: usize) -> f64 {
    let (nf, kf, df) = (n as f64, k as f64, d as f64);
    nf.ln().sqrt() * nf.powf(1.0 / df) / kf.powf(0.5 + 1.0 / df) + (kf / nf).powf(1.0 / df)
}

fn rejection(density: &TorusDensity, d: usize, n: usize, power: f64, rng: &mut StreamRng) -> Result<Vec<f64>> {
    let max = density.max_in(d).powf(power);
    let mut out = Vec::with_capacity(n * d);
    let mut x = vec![0.0; d];
    let mut tries = 0usize;
    let floor = 10_000.max(1000 * n);
    while out.len() < n * d {
        tries += 1;
        x.iter_mut().for_each(|v| *v = rng.random::<f64>());
        let fx = density.eval(&x);
        if !(fx > 0.0) || !fx.is_finite() {
            return Err(invalid("density", "must be positive and finite"));
        }
        if rng.random::<f64>() * max < fx.powf(power) {
            out.extend_from_slice(&x);
        }
        if tries >= floor {
            let rate = out.len() as f64 / d as f64 / tries as f64;
            if rate < 1e-3 {
                return Err(Error::LowAcceptance { rate, min: 1e-3 });
            }
        }
    }
    Ok(out)
}

/// Rejection samples from the density `∝ f^{2+2/d}`, uniformly weighted.
pub fn target_measure_samples(density: &TorusDensity, d: usize, n_samples: usize, seed: u64) -> Result<EmpiricalMeasure> {
    if d == 0 || n_samples == 0 {
        return Err(invalid("n_samples", "need d >= 1 and at least one sample"));
    }
    let mut rng = substream(seed, &[5]);
    let pts = rejection(density, d, n_samples, 2.0 + 2.0 / d as f64, &mut rng)?;
    EmpiricalMeasure::uniform(d, pts)
}

/// Points drawn from `f` itself.
pub fn sample_cloud(density: &TorusDensity, d: usize, n: usize, seed: u64) -> Result<TorusCloud> {
    let mut rng = substream(seed, &[6]);
    TorusCloud::new(d, rejection(density, d, n, 1.0, &mut rng)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct KnnResult {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    /// Exact torus-metric `W_2(π_{k,n}, target sample)`.
    pub w2: f64,
    pub bound_shape: f64,
    pub step_scale: f64,
    pub iterations: usize,
    pub residual: f64,
    pub warnings: Vec<String>,
}

/// Sample `n` points from `f`, build the k-NN walk, and compare its
/// stationary measure with `n` samples of the target `∝ f^{2+2/d}`.
pub fn knn_experiment(density: &TorusDensity, d: usize, n: usize, k: usize, seed: u64) -> Result<KnnResult> {
    let mut warnings = Vec::new();
    if n < 10 * k {
        warnings.push(format!("n = {n} is below 10k = {}; the walk sees a large fraction of the cloud", 10 * k));
    }
    let cloud = sample_cloud(density, d, n, seed)?;
    let graph = build_walk_graph(&cloud, k)?;
    let st = stationary_measure(&graph, 1e-12, 100_000)?;
    let pi = EmpiricalMeasure::new(d, cloud.points().to_vec(), st.weights.clone())?;
    let target = target_measure_samples(density, d, n, seed)?;
    let w2 = wasserstein_exact_with(&pi, &target, 2.0, torus_distance)?;
    Ok(KnnResult {
        n,
        k,
        d,
        w2,
        bound_shape: bound_shape(n, k, d),
        step_scale: knn_step_scale(k, n, d)?,
        iterations: st.iterations,
        residual: st.residual,
        warnings,
    })
}
