//! Small sample-statistics helpers shared by the experiments.

use crate::error::{invalid, Error, Result};

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Ordinary least squares fit of `y` on the columns of `x` plus an intercept.
///
/// Returns `(coefficients, r2)` with the intercept first.
pub fn ols(x: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = y.len();
    if n == 0 {
        return Err(Error::Empty("regression data"));
    }
    let p = x.first().map_or(0, |r| r.len()) + 1;
    if n < p {
        return Err(invalid("points", format!("need at least {p} points, got {n}")));
    }
    let design = nalgebra::DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { x[i][j - 1] });
    let rhs = nalgebra::DVector::from_column_slice(y);
    let gram = design.transpose() * &design;
    let coef = gram
        .cholesky()
        .ok_or_else(|| invalid("design", "regressors are collinear"))?
        .solve(&(design.transpose() * &rhs));
    let fitted = &design * &coef;
    let ybar = y.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(fitted.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok((coef.iter().copied().collect(), r2))
}

/// Slope and r² of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(invalid("points", "need at least 3 points"));
    }
    if let Some(v) = x.iter().chain(y).find(|v| !(**v > 0.0)) {
        return Err(invalid("values", format!("log-log fit needs positive values, got {v}")));
    }
    let xs: Vec<Vec<f64>> = x.iter().map(|v| vec![v.ln()]).collect();
    let ys: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (coef, r2) = ols(&xs, &ys)?;
    Ok((coef[1], r2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let x = [4.0, 16.0, 64.0, 256.0];
        let y: Vec<f64> = x.iter().map(|n: &f64| 3.0 * n.powf(-0.5)).collect();
        let (s, r2) = loglog_slope(&x, &y).unwrap();
        assert!((s + 0.5).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_regressors() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i % 5) as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| 1.0 + 2.0 * r[0] - 0.5 * r[1]).collect();
        let (c, _) = ols(&x, &y).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-10 && (c[1] - 2.0).abs() < 1e-10 && (c[2] + 0.5).abs() < 1e-10);
    }

    #[test]
    fn mean_and_stderr() {
        let (m, se) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
