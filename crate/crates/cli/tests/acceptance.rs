//! One PASS/FAIL line per acceptance criterion. Runs as a plain binary
//! (`harness = false`) and exits nonzero if any criterion fails.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::Rng;
use steincert_cli::config::{CltSection, ExperimentConfig};
use steincert_cli::{pipelines, run_cli, Pipeline};
use steincert_core::clt::{clt_empirical_wp, CltPair, SummandDistribution, SummandKind};
use steincert_core::graph::{build_walk_graph, knn_experiment, stationary_measure, TorusCloud, TorusDensity};
use steincert_core::hermite::{hermite_sq_norm, MultiIndex};
use steincert_core::lmc::{
    contraction_experiment, stationary_moment_experiment, stationary_second_moment_bound, Scheme, StandardGaussian,
};
use steincert_core::quadrature::gauss_hermite;
use steincert_core::rng::{substream, DEFAULT_SEED};
use steincert_core::stein::{curvature_weight_fk, gauss_w2_bound, gauss_w2_nodes, BoundConfig, OrnsteinUhlenbeckPair};
use steincert_core::transport::{wasserstein_1d, wasserstein_exact, EmpiricalMeasure};

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

/// Every multi-index of order `k` over `d` labels.
fn all_indices(d: usize, k: usize) -> Vec<MultiIndex> {
    let total = d.pow(k as u32);
    (0..total)
        .map(|mut r| {
            let e = (0..k)
                .map(|_| {
                    let v = r % d;
                    r /= d;
                    v
                })
                .collect();
            MultiIndex::new(d, e).unwrap()
        })
        .collect()
}

/// `E[f(Z)]` for `Z ~ N(0, I_d)` by the tensor Gauss–Hermite rule.
fn gh_expect(d: usize, nodes: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
    let (x, w) = gauss_hermite(nodes);
    let mut idx = vec![0usize; d];
    let mut pt = vec![0.0; d];
    let mut acc = 0.0;
    loop {
        let mut weight = 1.0;
        for j in 0..d {
            pt[j] = x[idx[j]];
            weight *= w[idx[j]];
        }
        acc += weight * f(&pt);
        let mut j = 0;
        loop {
            if j == d {
                return acc;
            }
            idx[j] += 1;
            if idx[j] < nodes {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

fn hermite_norms() -> Outcome {
    // frozen hand values: prod of factorials of the coordinate counts
    let hand = [(2, vec![0, 0, 1], 2.0), (3, vec![2, 2, 2, 2, 0], 24.0), (1, vec![0; 5], 120.0)];
    for (d, e, want) in hand {
        let got = hermite_sq_norm(&MultiIndex::new(d, e.clone()).unwrap());
        if got != want {
            return Ok((false, format!("norm of {e:?} in d = {d} is {got}, expected {want}")));
        }
    }
    let mut worst = 0.0f64;
    let mut count = 0;
    for d in 1..=3 {
        for k in 0..=5 {
            for idx in all_indices(d, k) {
                let quad = gh_expect(d, 8, |x| idx.eval(x).powi(2));
                let exact = hermite_sq_norm(&idx);
                worst = worst.max((quad - exact).abs() / exact);
                count += 1;
            }
        }
    }
    let mut rng = substream(DEFAULT_SEED, &[900]);
    let mut worst_orth = 0.0f64;
    let mut pairs = 0;
    while pairs < 50 {
        let d = rng.random_range(1..=3);
        let draw = |rng: &mut steincert_core::rng::StreamRng| {
            let k = rng.random_range(0..=5);
            MultiIndex::new(d, (0..k).map(|_| rng.random_range(0..d)).collect()).unwrap()
        };
        let (a, b) = (draw(&mut rng), draw(&mut rng));
        // ordered tuples with the same counts are the same polynomial
        if a.counts() == b.counts() {
            continue;
        }
        let ip = gh_expect(d, 8, |x| a.eval(x) * b.eval(x));
        worst_orth = worst_orth.max(ip.abs() / (hermite_sq_norm(&a) * hermite_sq_norm(&b)).sqrt());
        pairs += 1;
    }
    Ok((
        worst <= 1e-6 && worst_orth <= 1e-7,
        format!("{count} indices, worst relative norm error {worst:.2e}; 50 pairs, worst inner product {worst_orth:.2e}"),
    ))
}

fn transport_oracle() -> Outcome {
    let w = |a: &[f64], wa: &[f64], b: &[f64], wb: &[f64], p: f64| -> f64 {
        let ma = EmpiricalMeasure::new(1, a.to_vec(), wa.to_vec()).unwrap();
        let mb = EmpiricalMeasure::new(1, b.to_vec(), wb.to_vec()).unwrap();
        wasserstein_exact(&ma, &mb, p).unwrap()
    };
    let hand = [
        (w(&[0.0, 1.0], &[0.5, 0.5], &[0.0, 1.0], &[0.5, 0.5], 2.0), 0.0),
        (w(&[0.0, 1.0], &[0.5, 0.5], &[1.0, 2.0], &[0.5, 0.5], 2.0), 1.0),
        (w(&[0.0, 0.0], &[0.5, 0.5], &[0.0, 3.0], &[0.5, 0.5], 1.0), 1.5),
        (w(&[0.0, 0.0], &[0.5, 0.5], &[0.0, 3.0], &[0.5, 0.5], 2.0), 4.5f64.sqrt()),
        (w(&[0.0], &[1.0], &[0.0, 2.0], &[0.5, 0.5], 2.0), 2f64.sqrt()),
        (w(&[0.0], &[1.0], &[0.0, 2.0], &[0.5, 0.5], 1.0), 1.0),
        (w(&[0.0, 1.0], &[0.25, 0.75], &[0.0, 1.0], &[0.75, 0.25], 1.0), 0.5),
    ];
    for (i, (got, want)) in hand.iter().enumerate() {
        if (got - want).abs() > 1e-12 {
            return Ok((false, format!("hand case {i}: got {got}, expected {want}")));
        }
    }
    let mut rng = substream(DEFAULT_SEED, &[901]);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..=8);
        let p = [1.0, 1.5, 2.0, 3.0][rng.random_range(0..4)];
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let fast = wasserstein_1d(&a, &b, p).map_err(|e| e.to_string())?;
        let exact = wasserstein_exact(
            &EmpiricalMeasure::uniform(1, a).unwrap(),
            &EmpiricalMeasure::uniform(1, b).unwrap(),
            p,
        )
        .map_err(|e| e.to_string())?;
        worst = worst.max((fast - exact).abs());
    }
    Ok((worst <= 1e-9, format!("{} hand cases exact; 100 random instances, worst gap {worst:.2e}", hand.len())))
}

fn lmc_gaussian_moment() -> Outcome {
    let h = 0.1;
    let mut lines = Vec::new();
    let mut ok = true;
    for (i, d) in [1usize, 4].into_iter().enumerate() {
        let fixed_point = d as f64 / (1.0 - h / 2.0);
        let bound = stationary_second_moment_bound(d, h, 1.0, 1.0).map_err(|e| e.to_string())?;
        let rel = (bound - fixed_point).abs() / fixed_point;
        let r = stationary_moment_experiment(&StandardGaussian { dim: d }, Scheme::Coordinate, h, 16, 1_000_000, 1000 + i as u64)
            .map_err(|e| e.to_string())?;
        let z = (r.second_moment - fixed_point) / r.stderr;
        ok &= z.abs() < 3.0 && rel <= 1e-12;
        lines.push(format!("d = {d}: {:.5} ± {:.5} vs {fixed_point:.5} (z = {z:.2}), bound rel gap {rel:.1e}", r.second_moment, r.stderr));
    }
    Ok((ok, lines.join("; ")))
}

fn contraction() -> Outcome {
    // 1 - (2h - h^2)/d at h = 0.1, d = 2
    let predicted = 0.905;
    let r = contraction_experiment(&StandardGaussian { dim: 2 }, 0.1, 200_000, 1100).map_err(|e| e.to_string())?;
    let z = (r.measured - predicted) / r.stderr;
    Ok((z.abs() < 3.0, format!("measured {:.5} ± {:.5} vs 0.905 (z = {z:.2})", r.measured, r.stderr)))
}

fn clt_slope() -> Outcome {
    let cfg = ExperimentConfig {
        clt: CltSection {
            summand: SummandKind::Rademacher,
            d: 1,
            ns: vec![4, 16, 64, 256, 1024],
            p: 2.0,
            q: 2.0,
            n_samples: 2000,
        },
        ..ExperimentConfig::default()
    };
    cfg.clt.validate().map_err(|e| e.to_string())?;
    let out = pipelines::run_pipeline(Pipeline::Clt, &cfg, DEFAULT_SEED).map_err(|e| e.to_string())?;
    let slope = out.result["slope"].as_f64().ok_or("no slope")?;
    let dists: Vec<String> = out.result["rows"]
        .as_array()
        .ok_or("no rows")?
        .iter()
        .map(|r| format!("{:.4}", r["estimate"]["distance"].as_f64().unwrap_or(f64::NAN)))
        .collect();
    Ok(((-0.65..=-0.35).contains(&slope), format!("slope {slope:.3} (W2 by n: {})", dists.join(", "))))
}

fn bound_certification() -> Outcome {
    let dist = SummandDistribution::new(SummandKind::Rademacher, 1).map_err(|e| e.to_string())?;
    let pair = CltPair::new(dist, 16).map_err(|e| e.to_string())?;
    let cfg = BoundConfig {
        s: pair.scale(),
        ..BoundConfig::default()
    };
    let r = gauss_w2_bound(&pair, &cfg).map_err(|e| e.to_string())?;
    let emp = clt_empirical_wp(&dist, 16, 2.0, 2000, DEFAULT_SEED).map_err(|e| e.to_string())?;
    let combined = (r.total_stderr.powi(2) + emp.stderr.powi(2)).sqrt();
    let certified = r.total >= emp.distance - 3.0 * combined;

    let ou = OrnsteinUhlenbeckPair::new(1, 1e-5);
    let ou_cfg = BoundConfig {
        s: ou.matched_scale(),
        ..BoundConfig::default()
    };
    let nodes = gauss_w2_nodes(&ou, &ou_cfg).map_err(|e| e.to_string())?;
    let mut max_z = 0.0f64;
    for n in &nodes {
        for k in 0..2 {
            let z = if n.raw_stderr[k] > 0.0 { (n.raw[k] / n.raw_stderr[k]).abs() } else if n.raw[k] == 0.0 { 0.0 } else { f64::INFINITY };
            max_z = max_z.max(z);
        }
    }
    Ok((
        certified && r.tail_diagnostic < 0.1 && max_z < 3.0,
        format!(
            "bound {:.4} ± {:.4} vs empirical W2 {:.4} ± {:.4}; tail diagnostic {:.2e}; OU noise floor max |z| {max_z:.2}",
            r.total, r.total_stderr, emp.distance, emp.stderr, r.tail_diagnostic
        ),
    ))
}

fn fk_continuity() -> Outcome {
    let mut worst = 0.0f64;
    for k in 2..=6 {
        for t in [0.1, 1.0, 10.0] {
            for d in [1, 5] {
                let at0 = curvature_weight_fk(k, t, 0.0, d).map_err(|e| e.to_string())?;
                for rho in [1e-8, -1e-8] {
                    let v = curvature_weight_fk(k, t, rho, d).map_err(|e| e.to_string())?;
                    worst = worst.max((v - at0).abs() / at0.abs());
                }
            }
        }
    }
    Ok((worst <= 1e-6, format!("worst relative gap {worst:.2e} over 60 cases")))
}

fn knn_stationary() -> Outcome {
    let uniform = TorusDensity::uniform();
    let mut decreasing = 0;
    let mut lines = Vec::new();
    for seed in 1..=3u64 {
        let w: Vec<f64> = [500usize, 1000, 2000]
            .iter()
            .map(|&n| {
                let k = ((n as f64).powf(0.8).ceil()) as usize;
                knn_experiment(&uniform, 1, n, k, seed).map(|r| r.w2)
            })
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        decreasing += usize::from(w[1] < w[0] && w[2] < w[1]);
        lines.push(format!("seed {seed}: {:.4}/{:.4}/{:.4}", w[0], w[1], w[2]));
    }
    // equispaced points with an odd k give a symmetric regular walk
    let n = 200;
    let cloud = TorusCloud::new(1, (0..n).map(|i| i as f64 / n as f64).collect()).map_err(|e| e.to_string())?;
    let g = build_walk_graph(&cloud, 7).map_err(|e| e.to_string())?;
    let st = stationary_measure(&g, 1e-14, 100_000).map_err(|e| e.to_string())?;
    let gap = st.weights.iter().map(|w| (w - 1.0 / n as f64).abs()).fold(0.0, f64::max);
    Ok((
        decreasing >= 2 && gap <= 1e-10,
        format!("{decreasing} of 3 seeds decrease ({}); doubly stochastic gap {gap:.1e}", lines.join(", ")),
    ))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cases = [
        ("bound", "[bound]\nsampler = { type = \"clt\", summand = \"rademacher\", d = 1, n = 16 }\nn_outer = 500\nnodes = 80\n"),
        ("clt", "[clt]\nns = [4, 16, 64]\nn_samples = 500\n"),
        ("knn", "[knn]\nns = [300, 600]\nrepeats = 2\n"),
        ("lmc", "[lmc]\ndims = [1, 4]\nsteps = 20000\n"),
    ];
    let mut same = 0;
    for (sub, body) in cases {
        let cfg = dir.path().join(format!("{sub}.toml"));
        fs::write(&cfg, body).map_err(|e| e.to_string())?;
        let run_at = |threads: &str| -> Result<Vec<u8>, String> {
            let out = dir.path().join(format!("{sub}-{threads}"));
            let code = run_cli([
                "steincert",
                sub,
                "--config",
                &cfg.display().to_string(),
                "--out",
                &out.display().to_string(),
                "--threads",
                threads,
                "--seed",
                "77",
            ]);
            if code != 0 {
                return Err(format!("{sub} exited with {code}"));
            }
            fs::read(Path::new(&out).join("results.csv")).map_err(|e| e.to_string())
        };
        let (a, b) = (run_at("1")?, run_at("4")?);
        same += usize::from(a == b && !a.is_empty());
    }
    Ok((same == cases.len(), format!("{same} of {} pipelines byte-identical at 1 and 4 threads", cases.len())))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("Hermite norm identity", hermite_norms, Duration::from_secs(10)),
        ("OT oracle equivalence", transport_oracle, Duration::from_secs(5)),
        ("LMC Gaussian exactness", lmc_gaussian_moment, Duration::from_secs(120)),
        ("Contraction check", contraction, Duration::from_secs(30)),
        ("CLT rate slope", clt_slope, Duration::from_secs(300)),
        ("Bound certification", bound_certification, Duration::from_secs(600)),
        ("f_k continuity", fk_continuity, Duration::from_secs(1)),
        ("k-NN stationary measure", knn_stationary, Duration::from_secs(180)),
        ("Determinism", determinism, Duration::MAX),
    ];
    let mut failed = 0;
    for (i, (name, f, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let (ok, detail) = match outcome {
            Ok((ok, d)) => (ok, d),
            Err(e) => (false, format!("error: {e}")),
        };
        let in_time = took <= *limit;
        let pass = ok && in_time;
        failed += usize::from(!pass);
        let timing = if *limit == Duration::MAX {
            format!("{:.1}s", took.as_secs_f64())
        } else {
            format!("{:.1}s, limit {}s{}", took.as_secs_f64(), limit.as_secs(), if in_time { "" } else { " EXCEEDED" })
        };
        println!("criterion {}: {} {name} - {detail} [{timing}]", i + 1, if pass { "PASS" } else { "FAIL" });
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
