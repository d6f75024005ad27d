//! Gauss rules and composite Simpson integration on nonuniform grids.

use crate::error::{invalid, Result};

const NEWTON_EPS: f64 = 3e-15;

/// Gauss–Hermite rule for the standard normal weight.
///
/// Nodes and weights satisfy `sum w_i f(x_i) ≈ E f(Z)`, exact for polynomials
/// of degree `2n - 1`. Nodes are returned in increasing order.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Hermite rule needs at least one node");
    if n > 150 {
        // the Newton recurrence overflows for the outermost nodes here
        return golub_welsch_hermite(n);
    }
    // Orthonormal recurrence for weight exp(-x^2), Newton on the roots.
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let m = n.div_ceil(2);
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.166_666_67),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= NEWTON_EPS * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    let scale = std::f64::consts::PI.sqrt();
    let mut nodes: Vec<f64> = x.iter().map(|v| v * std::f64::consts::SQRT_2).collect();
    let mut weights: Vec<f64> = w.iter().map(|v| v / scale).collect();
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

fn golub_welsch_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    // Jacobi matrix of the monic probabilists' recurrence
    let mut j = nalgebra::DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let b = (i as f64).sqrt();
        j[(i, i - 1)] = b;
        j[(i - 1, i)] = b;
    }
    let eig = nalgebra::SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Gauss–Legendre rule on `[-1, 1]`, nodes increasing.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= NEWTON_EPS {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `n` geometrically spaced nodes from `t_min` to `t_max` inclusive.
pub fn geometric_grid(t_min: f64, t_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max > t_min) {
        return Err(invalid("t_grid", format!("need 0 < t_min < t_max, got {t_min}, {t_max}")));
    }
    if n < 3 {
        return Err(invalid("t_grid", "need at least 3 nodes"));
    }
    let ratio = (t_max / t_min).ln() / (n - 1) as f64;
    let mut g: Vec<f64> = (0..n).map(|i| t_min * (ratio * i as f64).exp()).collect();
    g[n - 1] = t_max;
    Ok(g)
}

/// Composite Simpson rule on strictly increasing, possibly nonuniform nodes.
///
/// Consecutive interval pairs use the exact integral of the interpolating
/// parabola; a leftover final interval is handled by the parabola through the
/// last three nodes.
pub fn simpson(x: &[f64], f: &[f64]) -> f64 {
    assert_eq!(x.len(), f.len());
    let n = x.len();
    match n {
        0 | 1 => return 0.0,
        2 => return 0.5 * (x[1] - x[0]) * (f[0] + f[1]),
        _ => {}
    }
    let mut total = 0.0;
    let mut i = 0;
    while i + 2 < n {
        let h0 = x[i + 1] - x[i];
        let h1 = x[i + 2] - x[i + 1];
        total += (h0 + h1) / 6.0
            * ((2.0 - h1 / h0) * f[i]
                + (h0 + h1) * (h0 + h1) / (h0 * h1) * f[i + 1]
                + (2.0 - h0 / h1) * f[i + 2]);
        i += 2;
    }
    if i + 1 < n {
        // last interval [x_{n-2}, x_{n-1}] from the parabola through the last three nodes
        let (a, b, c) = (x[n - 3], x[n - 2], x[n - 1]);
        let h0 = b - a;
        let h1 = c - b;
        let w_a = -h1 * h1 * h1 / (6.0 * h0 * (h0 + h1));
        let w_b = h1 * (h1 + 3.0 * h0) / (6.0 * h0);
        let w_c = h1 * (2.0 * h1 + 3.0 * h0) / (6.0 * (h0 + h1));
        total += w_a * f[n - 3] + w_b * f[n - 2] + w_c * f[n - 1];
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_rule_reproduces_normal_moments() {
        let (x, w) = gauss_hermite(20);
        let m = |p: i32| x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum::<f64>();
        assert!((m(0) - 1.0).abs() < 1e-13);
        assert!(m(1).abs() < 1e-13);
        assert!((m(2) - 1.0).abs() < 1e-13);
        assert!((m(4) - 3.0).abs() < 1e-12);
        assert!((m(8) - 105.0).abs() < 1e-9);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn large_hermite_rule_is_stable() {
        let (x, w) = gauss_hermite(256);
        let s: f64 = w.iter().sum();
        assert!((s - 1.0).abs() < 1e-12, "{s}");
        let m6: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(6)).sum();
        assert!((m6 - 15.0).abs() < 1e-9);
    }

    #[test]
    fn legendre_rule() {
        let (x, w) = gauss_legendre(7);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-13, "{s}");
        let m12: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((m12 - 2.0 / 13.0).abs() < 1e-14);
    }

    #[test]
    fn simpson_is_exact_on_quadratics() {
        for n in [3usize, 4, 7, 10] {
            let x = geometric_grid(0.1, 3.0, n).unwrap();
            let f: Vec<f64> = x.iter().map(|t| 2.0 * t * t - t + 1.0).collect();
            let exact = |t: f64| 2.0 * t.powi(3) / 3.0 - t * t / 2.0 + t;
            let got = simpson(&x, &f);
            assert!((got - (exact(3.0) - exact(0.1))).abs() < 1e-12, "n={n}: {got}");
        }
    }

    #[test]
    fn geometric_grid_endpoints() {
        let g = geometric_grid(1e-4, 20.0, 200).unwrap();
        assert_eq!(g.len(), 200);
        assert!((g[0] - 1e-4).abs() < 1e-18 && g[199] == 20.0);
        assert!(geometric_grid(0.0, 1.0, 10).is_err());
    }
}
