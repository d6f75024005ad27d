//! The four pipelines. Every random stream is keyed off the run seed and the
//! sweep coordinates, never off the worker thread, so results do not depend
//! on the pool size.

use rayon::prelude::*;
use serde_json::json;
use steincert_core::clt::{clt_empirical_wp, clt_rate_expression, clt_rate_fit, CltPair, CltRateInputs, SummandDistribution};
use steincert_core::graph::{build_walk_graph, knn_experiment, sample_cloud, TorusDensity};
use steincert_core::lmc::{
    contraction_experiment, coordinate_step, euler_maruyama_step, langevin_spec, lmc_complexity_experiment,
    stationary_moment_experiment, ChainState, ComplexityConfig, CoordinateKernel, LogCosh, Potential, Scheme,
    StandardGaussian,
};
use steincert_core::quadrature::geometric_grid;
use steincert_core::rng::{stream_key, substream};
use steincert_core::stein::{
    gauss_w2_bound, gauss_w2_nodes, general_w2_bound, markov_chain_w2_bound, wp_gauss_1d_bound, wp_gauss_exch_bound,
    BoundConfig, BoundReport, DiffusionSpec, IndependentGaussianPair, NodeTerms, OrnsteinUhlenbeckPair, PairSampler,
    StaticPair,
};

use crate::config::{
    BoundKind, BoundSection, CltSection, DensitySpec, DiffusionChoice, ExperimentConfig, KnnSection, LmcExperiment,
    LmcSection, PotentialChoice, SamplerSpec,
};
use crate::output::{num, opt, to_value, PipelineOutput, Table};
use crate::{Pipeline, Result};

pub fn validate(pipeline: Pipeline, cfg: &ExperimentConfig) -> Result<()> {
    match pipeline {
        Pipeline::Bound => cfg.bound.validate(),
        Pipeline::Clt => cfg.clt.validate(),
        Pipeline::Knn => cfg.knn.validate(),
        Pipeline::Lmc => cfg.lmc.validate(),
    }
}

/// Run a validated pipeline in the current rayon pool.
pub fn run_pipeline(pipeline: Pipeline, cfg: &ExperimentConfig, seed: u64) -> Result<PipelineOutput> {
    match pipeline {
        Pipeline::Bound => run_bound(&cfg.bound, seed),
        Pipeline::Clt => run_clt(&cfg.clt, seed),
        Pipeline::Knn => run_knn(&cfg.knn, seed),
        Pipeline::Lmc => run_lmc(&cfg.lmc, seed),
    }
}

fn kind_name(kind: BoundKind) -> String {
    to_value(&kind).as_str().unwrap_or_default().to_string()
}

fn scheme_name(s: Scheme) -> String {
    to_value(&s).as_str().unwrap_or_default().to_string()
}

struct BuiltSampler {
    sampler: Box<dyn PairSampler>,
    natural_scale: f64,
    clt: Option<(SummandDistribution, usize)>,
}

fn build_sampler(b: &BoundSection) -> Result<BuiltSampler> {
    Ok(match &b.sampler {
        SamplerSpec::Clt { summand, d, n } => {
            let dist = SummandDistribution::new(*summand, *d)?;
            let pair = CltPair::new(dist, *n)?;
            let s = pair.scale();
            BuiltSampler {
                sampler: Box::new(pair),
                natural_scale: s,
                clt: Some((dist, *n)),
            }
        }
        SamplerSpec::OrnsteinUhlenbeck { d, step } => {
            let pair = OrnsteinUhlenbeckPair::new(*d, step.unwrap_or(b.t_min / 10.0));
            let s = pair.matched_scale();
            BuiltSampler {
                sampler: Box::new(pair),
                natural_scale: s,
                clt: None,
            }
        }
        SamplerSpec::PointMass { point } => BuiltSampler {
            sampler: Box::new(StaticPair::point_mass(point.clone())),
            natural_scale: 1.0,
            clt: None,
        },
        SamplerSpec::Independent { d } => BuiltSampler {
            sampler: Box::new(IndependentGaussianPair::new(*d)),
            natural_scale: 1.0,
            clt: None,
        },
    })
}

fn node_table(kind: &str, p: f64, nodes: &[NodeTerms]) -> Table {
    let mut t = Table::new(&[
        "kind",
        "p",
        "t",
        "k",
        "term",
        "raw",
        "raw_stderr",
        "weight",
        "integrand",
        "integrand_stderr",
    ]);
    for n in nodes {
        for k in 0..n.raw.len() {
            t.push(vec![
                kind.to_string(),
                num(p),
                num(n.t),
                (k + 1).to_string(),
                num(n.terms[k]),
                num(n.raw[k]),
                num(n.raw_stderr[k]),
                num(n.weights[k]),
                num(n.integrand),
                num(n.integrand_stderr),
            ]);
        }
    }
    t
}

fn report_summary(r: &BoundReport) -> Vec<String> {
    let mut s = vec![
        format!("bound ({}, p = {}): total = {} ± {}", r.kind, r.p, r.total, r.total_stderr),
        format!("certificate = {}", r.certificate),
        format!(
            "tail diagnostic = {}, local exponent = {}, clamped estimates = {} of {}",
            r.tail_diagnostic, r.local_exponent, r.clamp_events, r.term_evaluations
        ),
    ];
    if let (Some(t), Some(c)) = (r.squared_weights_total, r.squared_weights_certificate) {
        s.push(format!("squared-weight variant: total = {t}, certificate = {c}"));
    }
    let contributions: Vec<String> = r.term_contributions.iter().map(|v| num(*v)).collect();
    s.push(format!("per-order contributions: {}", contributions.join(", ")));
    s.extend(r.notes.iter().map(|n| format!("note: {n}")));
    s
}

fn diffusion_for(choice: DiffusionChoice, d: usize) -> Result<DiffusionSpec> {
    Ok(match choice {
        DiffusionChoice::OrnsteinUhlenbeck => DiffusionSpec::ornstein_uhlenbeck(d)?,
        DiffusionChoice::LangevinLogCosh => langevin_spec(&LogCosh { dim: d })?,
    })
}

fn run_bound(b: &BoundSection, seed: u64) -> Result<PipelineOutput> {
    if b.kind == BoundKind::MarkovChain {
        return match b.markov.potential {
            PotentialChoice::StandardGaussian => run_markov(b, StandardGaussian { dim: b.markov.d }, seed),
            PotentialChoice::LogCosh => run_markov(b, LogCosh { dim: b.markov.d }, seed),
        };
    }
    let built = build_sampler(b)?;
    let cfg = BoundConfig {
        s: b.s.unwrap_or(built.natural_scale),
        t_grid: geometric_grid(b.t_min, b.t_max, b.nodes)?,
        k_max: b.k_max,
        n_outer: b.n_outer,
        replicates: b.replicates,
        seed,
        tail_limit: b.tail_limit,
    };
    let sampler = &*built.sampler;
    let kind = kind_name(b.kind);

    if b.kind == BoundKind::NoiseFloor {
        let nodes = gauss_w2_nodes(sampler, &cfg)?;
        let max_z: Vec<f64> = (0..2)
            .map(|k| {
                nodes
                    .iter()
                    .map(|n| {
                        let (r, se) = (n.raw[k], n.raw_stderr[k]);
                        if se > 0.0 {
                            (r / se).abs()
                        } else if r == 0.0 {
                            0.0
                        } else {
                            f64::INFINITY
                        }
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        let quiet = max_z.iter().all(|z| *z < 3.0);
        return Ok(PipelineOutput {
            table: node_table(&kind, 2.0, &nodes),
            result: json!({ "s": cfg.s, "max_abs_z": max_z, "within_3_sigma": quiet, "nodes": nodes }),
            summary: vec![
                format!("noise floor at s = {}: max |z| order 1 = {}, order 2 = {}", cfg.s, max_z[0], max_z[1]),
                format!("mismatch terms within 3 sigma of zero: {}", if quiet { "yes" } else { "no" }),
            ],
            extra: Vec::new(),
        });
    }

    let report = match b.kind {
        BoundKind::GaussW2 => gauss_w2_bound(sampler, &cfg)?,
        BoundKind::WpGauss1d => wp_gauss_1d_bound(sampler, b.p, &cfg)?,
        BoundKind::WpGaussExch => wp_gauss_exch_bound(sampler, b.p, &cfg)?,
        BoundKind::GeneralW2 => {
            let spec = diffusion_for(b.diffusion, sampler.dim())?;
            general_w2_bound(sampler, &spec, b.horizon, &cfg)?
        }
        BoundKind::NoiseFloor | BoundKind::MarkovChain => unreachable!("handled above"),
    };
    let mut summary = report_summary(&report);
    let mut result = json!({ "report": report });
    if let (Some(m), Some((dist, n))) = (b.empirical_samples, built.clt) {
        let est = clt_empirical_wp(&dist, n, report.p, m, stream_key(seed, &[50]))?;
        let combined = (report.total_stderr.powi(2) + est.stderr.powi(2)).sqrt();
        let certified = report.total >= est.distance - 3.0 * combined;
        summary.push(format!(
            "empirical W_{} = {} ± {}; bound >= empirical - 3 sigma: {}",
            report.p,
            est.distance,
            est.stderr,
            if certified { "yes" } else { "no" }
        ));
        result["empirical"] = json!({ "estimate": est, "combined_stderr": combined, "certified": certified });
    }
    Ok(PipelineOutput {
        table: node_table(&kind, report.p, &report.nodes),
        result,
        summary,
        extra: Vec::new(),
    })
}

fn run_markov<P: Potential + Clone + Send + 'static>(b: &BoundSection, pot: P, seed: u64) -> Result<PipelineOutput> {
    let m = &b.markov;
    let chains = stationary_moment_experiment(&pot, Scheme::Coordinate, m.h, m.chains, m.steps, stream_key(seed, &[60]))?;
    let spec = langevin_spec(&pot)?;
    let kernel = CoordinateKernel { potential: &pot, h: m.h };
    let s = b.s.unwrap_or(m.h / m.d as f64);
    let r = markov_chain_w2_bound(&kernel, &chains.final_positions, &spec, b.tau, s, b.k_max)?;

    let mut t = Table::new(&["kind", "potential", "d", "h", "tau", "s", "term", "k", "value"]);
    let mut terms = vec![("drift", 1, r.drift_term), ("diffusion", 2, r.diffusion_term), ("third", 3, r.third_term)];
    terms.extend(r.series_terms.iter().enumerate().map(|(j, v)| ("series", j + 4, *v)));
    for (name, k, v) in terms {
        t.push(vec![
            "markov_chain".into(),
            pot.name().to_string(),
            m.d.to_string(),
            num(m.h),
            num(b.tau),
            num(s),
            name.into(),
            k.to_string(),
            num(v),
        ]);
    }
    let summary = vec![
        format!("markov chain bound ({}, d = {}, h = {}, tau = {}, s = {})", pot.name(), m.d, m.h, b.tau, s),
        format!("total = {}, certificate = {}", r.total, r.certificate),
        format!(
            "C(rho) = {}, drift mismatch = {}, diffusion mismatch = {}",
            r.c_rho, r.drift_mismatch, r.diffusion_mismatch
        ),
    ];
    Ok(PipelineOutput {
        table: t,
        result: json!({ "report": r, "chain_second_moment": chains.second_moment }),
        summary,
        extra: Vec::new(),
    })
}

fn run_clt(c: &CltSection, seed: u64) -> Result<PipelineOutput> {
    let dist = SummandDistribution::new(c.summand, c.d)?;
    let rows = c
        .ns
        .par_iter()
        .map(|&n| {
            let run_seed = stream_key(seed, &[20, n as u64]);
            let est = clt_empirical_wp(&dist, n, c.p, c.n_samples, run_seed)?;
            let rate = clt_rate_expression(&CltRateInputs::from_distribution(&dist, n, c.p, c.q))?;
            Ok((n, run_seed, est, rate))
        })
        .collect::<Result<Vec<_>>>()?;
    let summand = to_value(&c.summand).as_str().unwrap_or_default().to_string();
    let mut t = Table::new(&[
        "n",
        "p",
        "q",
        "d",
        "summand",
        "distance",
        "stderr",
        "rate_expression",
        "rate_scaled",
        "seed",
    ]);
    for (n, s, est, rate) in &rows {
        t.push(vec![
            n.to_string(),
            num(c.p),
            num(c.q),
            c.d.to_string(),
            summand.clone(),
            num(est.distance),
            num(est.stderr),
            num(rate.value),
            num(rate.scaled_value),
            s.to_string(),
        ]);
    }
    let distances: Vec<f64> = rows.iter().map(|r| r.2.distance).collect();
    let (slope, r2) = clt_rate_fit(&c.ns, &distances)?;
    let summary = vec![
        format!("clt ({summand}, d = {}, p = {}): {} sample counts, {} replicas each", c.d, c.p, c.ns.len(), c.n_samples),
        format!("log-log slope = {slope}, r2 = {r2}"),
    ];
    let result = json!({
        "rows": rows.iter().map(|(n, s, est, rate)| json!({"n": n, "seed": s, "estimate": est, "rate": rate})).collect::<Vec<_>>(),
        "slope": slope,
        "r2": r2,
    });
    Ok(PipelineOutput {
        table: t,
        result,
        summary,
        extra: Vec::new(),
    })
}

fn density_for(spec: &DensitySpec) -> Result<TorusDensity> {
    Ok(match spec {
        DensitySpec::Uniform => TorusDensity::uniform(),
        DensitySpec::Cosine { amplitude } => TorusDensity::cosine(*amplitude)?,
    })
}

fn run_knn(c: &KnnSection, seed: u64) -> Result<PipelineOutput> {
    let density = density_for(&c.density)?;
    let jobs: Vec<(usize, usize)> = (0..c.repeats).flat_map(|r| c.ns.iter().map(move |&n| (r, n))).collect();
    let results = jobs
        .par_iter()
        .map(|&(r, n)| {
            let run_seed = seed.wrapping_add(r as u64);
            let k = c.k_for(n);
            let res = knn_experiment(&density, c.d, n, k, run_seed)?;
            let edges = if c.export_edges {
                let graph = build_walk_graph(&sample_cloud(&density, c.d, n, run_seed)?, k)?;
                let mut buf = Vec::new();
                graph.write_edge_list(&mut buf)?;
                Some((format!("edges_n{n}_r{r}.txt"), buf))
            } else {
                None
            };
            Ok((r, run_seed, res, edges))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut t = Table::new(&[
        "n",
        "k",
        "d",
        "density",
        "repeat",
        "seed",
        "w2",
        "bound_shape",
        "step_scale",
        "iterations",
        "residual",
    ]);
    let mut extra = Vec::new();
    let mut summary = vec![format!("knn ({}, d = {}): {} run(s)", density.name(), c.d, results.len())];
    for (r, s, res, edges) in results.iter() {
        t.push(vec![
            res.n.to_string(),
            res.k.to_string(),
            res.d.to_string(),
            density.name().to_string(),
            r.to_string(),
            s.to_string(),
            num(res.w2),
            num(res.bound_shape),
            num(res.step_scale),
            res.iterations.to_string(),
            num(res.residual),
        ]);
        summary.extend(res.warnings.iter().map(|w| format!("warning (n = {}, repeat {r}): {w}", res.n)));
        if let Some(e) = edges {
            extra.push(e.clone());
        }
    }
    let mut decreasing = 0;
    for r in 0..c.repeats {
        let mut series: Vec<(usize, f64)> = results.iter().filter(|x| x.0 == r).map(|x| (x.2.n, x.2.w2)).collect();
        series.sort_by_key(|x| x.0);
        let mono = series.windows(2).all(|w| w[1].1 < w[0].1);
        decreasing += usize::from(mono);
        let vals: Vec<String> = series.iter().map(|(n, w)| format!("{n}: {w}")).collect();
        summary.push(format!("repeat {r}: W2 by n = {} ({})", vals.join(", "), if mono { "decreasing" } else { "not monotone" }));
    }
    summary.push(format!("{decreasing} of {} repeat(s) decrease monotonically in n", c.repeats));
    let rows: Vec<_> = results.iter().map(|(r, s, res, _)| json!({"repeat": r, "seed": s, "result": res})).collect();
    Ok(PipelineOutput {
        table: t,
        result: json!({ "runs": rows, "monotone_repeats": decreasing }),
        summary,
        extra,
    })
}

fn lmc_table() -> Table {
    Table::new(&[
        "experiment",
        "scheme",
        "potential",
        "d",
        "h",
        "eps",
        "n",
        "chains",
        "metric",
        "estimate",
        "stderr",
        "bound",
        "seed",
    ])
}

/// Steps of chain 0 from the origin as CSV (`step,x_0,...`) and raw little-endian f64 rows.
fn chain_trace<P: Potential + ?Sized>(pot: &P, scheme: Scheme, h: f64, steps: usize, seed: u64) -> Result<(Vec<u8>, Vec<u8>)> {
    let d = pot.dim();
    let mut st = ChainState::at_origin(d, h)?;
    let mut rng = substream(seed, &[0]);
    let mut grad = vec![0.0; d];
    let mut header = vec!["step".to_string()];
    header.extend((0..d).map(|i| format!("x_{i}")));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    let mut bin = Vec::with_capacity(steps * d * 8);
    for step in 1..=steps {
        match scheme {
            Scheme::Coordinate => coordinate_step(&mut st, pot, &mut rng),
            Scheme::EulerMaruyama => euler_maruyama_step(&mut st, pot, &mut rng, &mut grad),
        }
        let mut rec = vec![step.to_string()];
        rec.extend(st.x.iter().map(|v| num(*v)));
        w.write_record(&rec)?;
        st.x.iter().for_each(|v| bin.extend_from_slice(&v.to_le_bytes()));
    }
    let text = w.into_inner().map_err(|e| crate::CliError::Csv(e.to_string()))?;
    Ok((text, bin))
}

fn run_lmc(c: &LmcSection, seed: u64) -> Result<PipelineOutput> {
    match c.experiment {
        LmcExperiment::Moments => lmc_moments(c, seed),
        LmcExperiment::Contraction => lmc_contraction(c, seed),
        LmcExperiment::Complexity => match c.potential {
            PotentialChoice::StandardGaussian => lmc_complexity(c, seed, |d| StandardGaussian { dim: d }),
            PotentialChoice::LogCosh => lmc_complexity(c, seed, |d| LogCosh { dim: d }),
        },
    }
}

fn potential_for(choice: PotentialChoice, d: usize) -> Box<dyn Potential + Send> {
    match choice {
        PotentialChoice::StandardGaussian => Box::new(StandardGaussian { dim: d }),
        PotentialChoice::LogCosh => Box::new(LogCosh { dim: d }),
    }
}

fn lmc_moments(c: &LmcSection, seed: u64) -> Result<PipelineOutput> {
    let mut t = lmc_table();
    let mut summary = Vec::new();
    let mut runs = Vec::new();
    let mut extra = Vec::new();
    for &d in &c.dims {
        let pot = potential_for(c.potential, d);
        for (si, &scheme) in c.schemes.iter().enumerate() {
            let run_seed = stream_key(seed, &[40, d as u64, si as u64]);
            let res = stationary_moment_experiment(&*pot, scheme, c.h, c.chains, c.steps, run_seed)?;
            let name = scheme_name(scheme);
            let base = |metric: &str, est: f64, se: Option<f64>, bound: Option<f64>| {
                vec![
                    "moments".to_string(),
                    name.clone(),
                    pot.name().to_string(),
                    d.to_string(),
                    num(c.h),
                    String::new(),
                    c.steps.to_string(),
                    c.chains.to_string(),
                    metric.to_string(),
                    num(est),
                    opt(se),
                    opt(bound),
                    run_seed.to_string(),
                ]
            };
            t.push(base("second_moment", res.second_moment, Some(res.stderr), res.bound));
            t.push(base("max_abs", res.max_abs, None, res.sup_bound.map(|b| b.exact)));
            summary.push(format!(
                "{name} d = {d}: E|X|^2 = {} ± {} (bound {})",
                res.second_moment,
                res.stderr,
                opt(res.bound)
            ));
            summary.extend(res.warnings.iter().map(|w| format!("warning ({name}, d = {d}): {w}")));
            if c.trace_steps > 0 {
                let (text, bin) = chain_trace(&*pot, scheme, c.h, c.trace_steps, stream_key(seed, &[41, d as u64, si as u64]))?;
                extra.push((format!("trace_{name}_d{d}.csv"), text));
                extra.push((format!("trace_{name}_d{d}.bin"), bin));
            }
            let mut v = to_value(&res);
            if let Some(o) = v.as_object_mut() {
                o.remove("final_positions");
            }
            runs.push(v);
        }
    }
    Ok(PipelineOutput {
        table: t,
        result: json!({ "runs": runs }),
        summary,
        extra,
    })
}

fn lmc_contraction(c: &LmcSection, seed: u64) -> Result<PipelineOutput> {
    let mut t = lmc_table();
    let mut summary = Vec::new();
    let mut runs = Vec::new();
    for &d in &c.dims {
        let pot = potential_for(c.potential, d);
        let run_seed = stream_key(seed, &[42, d as u64]);
        let r = contraction_experiment(&*pot, c.h, c.trials, run_seed)?;
        t.push(vec![
            "contraction".into(),
            "coordinate".into(),
            pot.name().to_string(),
            d.to_string(),
            num(c.h),
            String::new(),
            "1".into(),
            c.trials.to_string(),
            "contraction".into(),
            num(r.measured),
            num(r.stderr),
            num(r.predicted),
            run_seed.to_string(),
        ]);
        summary.push(format!("d = {d}: contraction {} ± {} (predicted {})", r.measured, r.stderr, r.predicted));
        runs.push(r);
    }
    Ok(PipelineOutput {
        table: t,
        result: json!({ "runs": runs }),
        summary,
        extra: Vec::new(),
    })
}

fn lmc_complexity<P: Potential>(c: &LmcSection, seed: u64, make: impl Fn(usize) -> P) -> Result<PipelineOutput> {
    let cc = &c.complexity;
    let cfg = ComplexityConfig {
        dims: c.dims.clone(),
        eps: cc.eps.clone(),
        h_const: cc.h_const,
        h_dim_power: cc.h_dim_power,
        chains: cc.chains,
        max_steps: cc.max_steps,
        checkpoints: cc.checkpoints,
        seed: stream_key(seed, &[43]),
    };
    let name = make(1).name().to_string();
    let report = lmc_complexity_experiment(make, &cfg)?;
    let mut t = lmc_table();
    for cell in &report.cells {
        for row in &cell.trace {
            t.push(vec![
                "complexity".into(),
                "coordinate".into(),
                name.clone(),
                cell.d.to_string(),
                num(cell.h),
                num(cell.eps),
                row.steps.to_string(),
                cc.chains.to_string(),
                "w2".into(),
                num(row.w2.distance),
                num(row.w2.stderr),
                num(cell.eps),
                cfg.seed.to_string(),
            ]);
        }
    }
    let mut summary: Vec<String> = report
        .cells
        .iter()
        .map(|c| {
            let n = c.n_star.map(|n| n.to_string()).unwrap_or_else(|| "budget exhausted".into());
            format!("d = {}, eps = {}, h = {}: n* = {n}", c.d, c.eps, c.h)
        })
        .collect();
    summary.push(format!(
        "fitted exponents: d {}, eps {} (r2 {})",
        opt(report.exponent_d),
        opt(report.exponent_eps),
        opt(report.r2)
    ));
    summary.extend(report.notes.iter().map(|n| format!("note: {n}")));
    Ok(PipelineOutput {
        table: t,
        result: json!({ "report": report }),
        summary,
        extra: Vec::new(),
    })
}
