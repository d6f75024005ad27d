//! Experiment configuration. TOML or JSON, one section per pipeline; missing
//! sections take their defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};
use steincert_core::clt::SummandKind;
use steincert_core::lmc::Scheme;

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub bound: BoundSection,
    #[serde(default)]
    pub clt: CltSection,
    #[serde(default)]
    pub knn: KnnSection,
    #[serde(default)]
    pub lmc: LmcSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    GaussW2,
    WpGauss1d,
    WpGaussExch,
    GeneralW2,
    MarkovChain,
    /// Per-node Gaussian terms without integration.
    NoiseFloor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplerSpec {
    Clt { summand: SummandKind, d: usize, n: usize },
    OrnsteinUhlenbeck { d: usize, step: Option<f64> },
    PointMass { point: Vec<f64> },
    Independent { d: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialChoice {
    StandardGaussian,
    LogCosh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionChoice {
    OrnsteinUhlenbeck,
    /// Langevin diffusion of the `log_cosh` potential.
    LangevinLogCosh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarkovSection {
    pub potential: PotentialChoice,
    pub d: usize,
    pub h: f64,
    pub chains: usize,
    pub steps: usize,
}

impl Default for MarkovSection {
    fn default() -> Self {
        Self {
            potential: PotentialChoice::StandardGaussian,
            d: 2,
            h: 0.01,
            chains: 256,
            steps: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundSection {
    pub kind: BoundKind,
    pub sampler: SamplerSpec,
    pub p: f64,
    /// Defaults to the sampler's natural scale.
    pub s: Option<f64>,
    pub t_min: f64,
    pub t_max: f64,
    pub nodes: usize,
    pub k_max: usize,
    pub n_outer: usize,
    pub replicates: usize,
    pub tail_limit: f64,
    pub horizon: f64,
    pub diffusion: DiffusionChoice,
    pub tau: f64,
    pub markov: MarkovSection,
    /// Compare with an empirical `W_p` on this many samples (CLT sampler only).
    pub empirical_samples: Option<usize>,
}

impl Default for BoundSection {
    fn default() -> Self {
        Self {
            kind: BoundKind::GaussW2,
            sampler: SamplerSpec::Clt {
                summand: SummandKind::Rademacher,
                d: 1,
                n: 16,
            },
            p: 2.0,
            s: None,
            t_min: 1e-4,
            t_max: 20.0,
            nodes: 200,
            k_max: 8,
            n_outer: 2000,
            replicates: 8,
            tail_limit: 0.1,
            horizon: 5.0,
            diffusion: DiffusionChoice::OrnsteinUhlenbeck,
            tau: 0.5,
            markov: MarkovSection::default(),
            empirical_samples: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CltSection {
    pub summand: SummandKind,
    pub d: usize,
    pub ns: Vec<usize>,
    pub p: f64,
    pub q: f64,
    pub n_samples: usize,
}

impl Default for CltSection {
    fn default() -> Self {
        Self {
            summand: SummandKind::Rademacher,
            d: 1,
            ns: vec![4, 16, 64, 256, 1024],
            p: 2.0,
            q: 2.0,
            n_samples: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Uniform,
    Cosine { amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnSection {
    pub density: DensitySpec,
    pub d: usize,
    pub ns: Vec<usize>,
    /// Fixed `k`; otherwise `k = ceil(n^k_exponent)`.
    pub k: Option<usize>,
    pub k_exponent: f64,
    pub repeats: usize,
    pub export_edges: bool,
}

impl Default for KnnSection {
    fn default() -> Self {
        Self {
            density: DensitySpec::Uniform,
            d: 1,
            ns: vec![500, 1000, 2000],
            k: None,
            k_exponent: 0.8,
            repeats: 1,
            export_edges: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LmcExperiment {
    Moments,
    Contraction,
    Complexity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComplexitySection {
    pub eps: Vec<f64>,
    pub h_const: f64,
    pub h_dim_power: f64,
    pub chains: usize,
    pub max_steps: usize,
    pub checkpoints: usize,
}

impl Default for ComplexitySection {
    fn default() -> Self {
        Self {
            eps: vec![0.3, 0.4, 0.6],
            h_const: 0.5,
            h_dim_power: 1.0,
            chains: 400,
            max_steps: 20_000,
            checkpoints: 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmcSection {
    pub experiment: LmcExperiment,
    pub potential: PotentialChoice,
    pub dims: Vec<usize>,
    pub h: f64,
    pub chains: usize,
    pub steps: usize,
    pub schemes: Vec<Scheme>,
    pub trials: usize,
    /// Record this many steps of chain 0 to `trace.csv` and `trace.bin`.
    pub trace_steps: usize,
    pub complexity: ComplexitySection,
}

impl Default for LmcSection {
    fn default() -> Self {
        Self {
            experiment: LmcExperiment::Moments,
            potential: PotentialChoice::StandardGaussian,
            dims: vec![1, 4],
            h: 0.1,
            chains: 16,
            steps: 200_000,
            schemes: vec![Scheme::Coordinate, Scheme::EulerMaruyama],
            trials: 100_000,
            trace_steps: 0,
            complexity: ComplexitySection::default(),
        }
    }
}

pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) || text.trim_start().starts_with('{');
    if is_json {
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

fn check(ok: bool, field: &str, reason: impl Into<String>) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Validation {
            field: field.to_string(),
            reason: reason.into(),
        })
    }
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

impl BoundSection {
    pub fn validate(&self) -> Result<(), CliError> {
        check(self.p >= 1.0 && self.p.is_finite(), "bound.p", format!("must be >= 1, got {}", self.p))?;
        if let Some(s) = self.s {
            check(positive(s), "bound.s", format!("must be positive, got {s}"))?;
        }
        check(positive(self.t_min), "bound.t_min", "must be positive")?;
        check(self.t_max > self.t_min && self.t_max.is_finite(), "bound.t_max", "must exceed t_min")?;
        check(self.nodes >= 3, "bound.nodes", "need at least 3 nodes")?;
        check(self.k_max >= 3, "bound.k_max", format!("must be >= 3, got {}", self.k_max))?;
        check(self.n_outer >= 2, "bound.n_outer", "need at least 2 outer draws")?;
        check(self.replicates >= 2, "bound.replicates", "need at least 2 replicates to debias")?;
        check(positive(self.tail_limit), "bound.tail_limit", "must be positive")?;
        check(positive(self.horizon), "bound.horizon", "must be positive")?;
        check(self.tau > 0.0 && self.tau < 1.0, "bound.tau", format!("must lie in (0, 1), got {}", self.tau))?;
        match &self.sampler {
            SamplerSpec::Clt { d, n, .. } => {
                check(*d >= 1, "bound.sampler.d", "must be >= 1")?;
                check(*n >= 1, "bound.sampler.n", "must be >= 1")?;
            }
            SamplerSpec::OrnsteinUhlenbeck { d, step } => {
                check(*d >= 1, "bound.sampler.d", "must be >= 1")?;
                if let Some(st) = step {
                    check(positive(*st), "bound.sampler.step", "must be positive")?;
                }
            }
            SamplerSpec::PointMass { point } => {
                check(!point.is_empty(), "bound.sampler.point", "must not be empty")?;
                check(point.iter().all(|v| v.is_finite()), "bound.sampler.point", "must be finite")?;
            }
            SamplerSpec::Independent { d } => check(*d >= 1, "bound.sampler.d", "must be >= 1")?,
        }
        if self.kind == BoundKind::WpGauss1d {
            check(self.sampler_dim() == 1, "bound.sampler.d", "wp_gauss_1d needs a one-dimensional sampler")?;
        }
        if let Some(n) = self.empirical_samples {
            check(n >= 100, "bound.empirical_samples", "must be >= 100")?;
            check(
                matches!(self.sampler, SamplerSpec::Clt { .. }),
                "bound.empirical_samples",
                "empirical comparison is available for the clt sampler only",
            )?;
        }
        if self.kind == BoundKind::MarkovChain {
            let m = &self.markov;
            check(m.d >= 1, "bound.markov.d", "must be >= 1")?;
            check(positive(m.h), "bound.markov.h", "must be positive")?;
            check(m.chains >= 2, "bound.markov.chains", "need at least 2 chains")?;
            check(m.steps >= 4, "bound.markov.steps", "need at least 4 steps")?;
        }
        Ok(())
    }

    pub fn sampler_dim(&self) -> usize {
        match &self.sampler {
            SamplerSpec::Clt { d, .. } | SamplerSpec::OrnsteinUhlenbeck { d, .. } | SamplerSpec::Independent { d } => *d,
            SamplerSpec::PointMass { point } => point.len(),
        }
    }
}

impl CltSection {
    pub fn validate(&self) -> Result<(), CliError> {
        check(self.d >= 1, "clt.d", "must be >= 1")?;
        check(self.ns.len() >= 3, "clt.ns", "need at least 3 sample counts for a slope")?;
        check(self.ns.windows(2).all(|w| w[1] > w[0]) && self.ns[0] >= 1, "clt.ns", "must be positive and strictly increasing")?;
        check(self.p >= 2.0 && self.p.is_finite(), "clt.p", format!("must be >= 2, got {}", self.p))?;
        check((0.0..=self.p).contains(&self.q), "clt.q", "must lie in [0, p]")?;
        check(self.n_samples >= 100, "clt.n_samples", "must be >= 100")?;
        Ok(())
    }
}

impl KnnSection {
    pub fn validate(&self) -> Result<(), CliError> {
        check(self.d >= 1, "knn.d", "must be >= 1")?;
        check(!self.ns.is_empty(), "knn.ns", "must not be empty")?;
        check(self.repeats >= 1, "knn.repeats", "must be >= 1")?;
        if let Some(k) = self.k {
            check(k >= 2, "knn.k", "must be >= 2")?;
            check(self.ns.iter().all(|&n| n >= k), "knn.k", "must not exceed any n")?;
        } else {
            check(self.k_exponent > 0.0 && self.k_exponent < 1.0, "knn.k_exponent", "must lie in (0, 1)")?;
        }
        check(self.ns.iter().all(|&n| n >= 3), "knn.ns", "every n must be >= 3")?;
        if let DensitySpec::Cosine { amplitude } = self.density {
            check((0.0..1.0).contains(&amplitude), "knn.density.amplitude", "must lie in [0, 1)")?;
        }
        Ok(())
    }

    pub fn k_for(&self, n: usize) -> usize {
        self.k.unwrap_or_else(|| ((n as f64).powf(self.k_exponent).ceil() as usize).clamp(2, n))
    }
}

impl LmcSection {
    pub fn validate(&self) -> Result<(), CliError> {
        check(!self.dims.is_empty() && self.dims.iter().all(|&d| d >= 1), "lmc.dims", "need dimensions >= 1")?;
        match self.experiment {
            LmcExperiment::Moments => {
                check(positive(self.h), "lmc.h", "must be positive")?;
                check(self.chains >= 2, "lmc.chains", "need at least 2 chains")?;
                check(self.steps >= 4, "lmc.steps", "need at least 4 steps")?;
                check(!self.schemes.is_empty(), "lmc.schemes", "must not be empty")?;
            }
            LmcExperiment::Contraction => {
                check(positive(self.h), "lmc.h", "must be positive")?;
                check(self.trials >= 2, "lmc.trials", "need at least 2 trials")?;
            }
            LmcExperiment::Complexity => {
                let c = &self.complexity;
                check(!c.eps.is_empty() && c.eps.iter().all(|e| positive(*e)), "lmc.complexity.eps", "need positive tolerances")?;
                check(positive(c.h_const), "lmc.complexity.h_const", "must be positive")?;
                check(c.chains >= 10, "lmc.complexity.chains", "need at least 10 chains")?;
                check(c.max_steps >= 1, "lmc.complexity.max_steps", "must be >= 1")?;
                check(c.checkpoints >= 2, "lmc.complexity.checkpoints", "must be >= 2")?;
            }
        }
        Ok(())
    }
}
