//! Least-squares line fits in log-log coordinates.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn line_fit(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len().min(y.len()) as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { f64::NAN };
    let r2 = if syy > 0.0 && sxx > 0.0 {
        sxy * sxy / (sxx * syy)
    } else if syy == 0.0 {
        1.0
    } else {
        0.0
    };
    LineFit { slope, intercept: my - slope * mx, r2 }
}

/// Fit of `log y` against `log x`; non-positive samples are dropped.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> LineFit {
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .unzip();
    line_fit(&lx, &ly)
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Pairwise summation for order-independent rounding.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let x = logspace(1e-4, 1e-1, 8);
        let y: Vec<f64> = x.iter().map(|h| 3.0 * h.powf(2.0 / 3.0)).collect();
        let f = loglog_fit(&x, &y);
        assert!((f.slope - 2.0 / 3.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn logspace_endpoints() {
        let v = logspace(1e-7, 1e-2, 16);
        assert!((v[0] - 1e-7).abs() < 1e-20);
        assert!((v[15] - 1e-2).abs() < 1e-15);
    }
}
