//! Probabilists' Hermite polynomials and their Gaussian norms.
//!
//! `He_k` is orthogonal under the standard normal law with `E[He_k^2] = k!`.
//! Multivariate polynomials are indexed by a [`MultiIndex`] and factor into
//! one-dimensional polynomials of the coordinate counts.

use crate::error::{invalid, Error, Result};
use crate::quadrature::{gauss_hermite, gauss_legendre};

/// Three-term recurrence `He_{k+1} = x He_k - k He_{k-1}`.
pub fn hermite_eval(k: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if k == 0 {
        return prev;
    }
    let mut cur = x;
    for j in 1..k {
        let next = x * cur - j as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `n!` as a float.
pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

/// An ordered tuple of coordinate labels.
///
/// Labels are zero-based (`0..d`) internally; [`MultiIndex::from_one_based`]
/// accepts the `1..=d` convention.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    dim: usize,
    entries: Vec<usize>,
}

impl MultiIndex {
    pub fn new(dim: usize, entries: Vec<usize>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "must be at least 1"));
        }
        if let Some(&e) = entries.iter().find(|&&e| e >= dim) {
            return Err(invalid("entries", format!("label {e} out of range for d = {dim}")));
        }
        Ok(Self { dim, entries })
    }

    pub fn from_one_based(dim: usize, entries: &[usize]) -> Result<Self> {
        if entries.contains(&0) {
            return Err(invalid("entries", "one-based labels start at 1"));
        }
        Self::new(dim, entries.iter().map(|e| e - 1).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    /// Number of occurrences of each coordinate.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.dim];
        for &e in &self.entries {
            c[e] += 1;
        }
        c
    }

    /// `H_i(x) = prod_j He_{c_j}(x_j)`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.counts()
            .iter()
            .zip(x)
            .map(|(&c, &xj)| hermite_eval(c, xj))
            .product()
    }
}

/// `E[H_i^2]` under the standard normal law, i.e. `prod_j c_j!`.
pub fn hermite_sq_norm(idx: &MultiIndex) -> f64 {
    idx.counts().into_iter().map(factorial).product()
}

/// `(E|He_k(Z)|^p)^{1/p}` for `Z ~ N(0, 1)`.
///
/// Even integer `p` makes the integrand a polynomial, and Gauss–Hermite with
/// node doubling is exact once the degree is covered. Otherwise `|He_k|^p` has
/// kinks at the roots of `He_k`; the integral is split at those roots and each
/// piece is integrated by Gauss–Legendre with panel doubling.
pub fn hermite_lp_norm(k: usize, p: f64, quad_points: usize) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(invalid("p", format!("must be finite and >= 1, got {p}")));
    }
    if quad_points < 32 {
        return Err(invalid("quad_points", format!("must be >= 32, got {quad_points}")));
    }
    if k == 0 {
        return Ok(1.0);
    }
    const TOL: f64 = 1e-9;
    let even_integer = p.fract() == 0.0 && (p as u64) % 2 == 0;
    let integral = if even_integer {
        // start where the rule is already exact for the degree k*p polynomial
        let mut n = quad_points.max((k as f64 * p / 2.0).ceil() as usize + 1);
        let mut prev = gh_moment(k, p, n);
        loop {
            n *= 2;
            let cur = gh_moment(k, p, n);
            if (cur - prev).abs() <= TOL * cur.abs() {
                break cur;
            }
            if n >= 512 {
                return Err(Error::Quadrature(format!(
                    "Gauss–Hermite estimates for k={k}, p={p} still differ by {:e}",
                    (cur - prev).abs() / cur.abs()
                )));
            }
            prev = cur;
        }
    } else {
        piecewise_moment(k, p, quad_points)?
    };
    Ok(integral.powf(1.0 / p))
}

fn gh_moment(k: usize, p: f64, n: usize) -> f64 {
    let (x, w) = gauss_hermite(n);
    x.iter()
        .zip(&w)
        .map(|(&x, &w)| w * hermite_eval(k, x).abs().powf(p))
        .sum()
}

fn piecewise_moment(k: usize, p: f64, order: usize) -> Result<f64> {
    // The roots of He_k are the nodes of the k-point Gauss–Hermite rule.
    let (roots, _) = gauss_hermite(k);
    let r_max = roots.last().copied().unwrap_or(0.0).abs();
    let edge = r_max.max(((k as f64) * p).sqrt()) + 12.0;
    let mut breaks = Vec::with_capacity(k + 2);
    breaks.push(-edge);
    breaks.extend(roots);
    breaks.push(edge);

    let (gx, gw) = gauss_legendre(order);
    let inv_sqrt_2pi = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let integrand = |x: f64| hermite_eval(k, x).abs().powf(p) * (-0.5 * x * x).exp() * inv_sqrt_2pi;
    let estimate = |panels: usize| -> f64 {
        let mut total = 0.0;
        for seg in breaks.windows(2) {
            let h = (seg[1] - seg[0]) / panels as f64;
            for j in 0..panels {
                let a = seg[0] + h * j as f64;
                let mid = a + 0.5 * h;
                let half = 0.5 * h;
                total += half * gx.iter().zip(&gw).map(|(&u, &w)| w * integrand(mid + half * u)).sum::<f64>();
            }
        }
        total
    };
    let mut panels = 1;
    let mut prev = estimate(panels);
    for _ in 0..12 {
        panels *= 2;
        let cur = estimate(panels);
        if (cur - prev).abs() <= 1e-9 * cur.abs() {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Quadrature(format!(
        "piecewise Gauss–Legendre for k={k}, p={p} did not settle after {panels} panels"
    )))
}
