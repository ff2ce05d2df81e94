//! Lattice-sampled symbols with multilinear interpolation.

use crate::error::{Error, Result};
use crate::linalg::{re, CMat};

#[derive(Debug, Clone)]
pub struct GridSymbol {
    pub dim: usize,
    /// Strictly increasing, uniformly spaced node coordinates per axis.
    pub axes: Vec<Vec<f64>>,
    /// Row-major over the lattice (last axis fastest).
    pub values: Vec<CMat>,
}

impl GridSymbol {
    pub fn new(dim: usize, axes: Vec<Vec<f64>>, values: Vec<CMat>) -> Result<Self> {
        let count: usize = axes.iter().map(|a| a.len()).product();
        if count != values.len() {
            return Err(Error::Dimension(format!(
                "grid has {count} nodes but {} values",
                values.len()
            )));
        }
        for a in &axes {
            if a.len() < 2 || a.windows(2).any(|p| p[1] <= p[0]) {
                return Err(Error::Input("grid axes need ≥ 2 increasing nodes".into()));
            }
        }
        if values.iter().any(|m| m.nrows() != dim || m.ncols() != dim) {
            return Err(Error::Dimension("grid value has wrong shape".into()));
        }
        Ok(Self { dim, axes, values })
    }

    /// Sample `f` on the lattice.
    pub fn sample(dim: usize, axes: Vec<Vec<f64>>, f: impl Fn(&[f64]) -> CMat) -> Result<Self> {
        let shape: Vec<usize> = axes.iter().map(|a| a.len()).collect();
        let count: usize = shape.iter().product();
        let mut values = Vec::with_capacity(count);
        let mut idx = vec![0usize; axes.len()];
        for _ in 0..count {
            let w: Vec<f64> = idx.iter().enumerate().map(|(k, &i)| axes[k][i]).collect();
            values.push(f(&w));
            for k in (0..idx.len()).rev() {
                idx[k] += 1;
                if idx[k] < shape[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Self::new(dim, axes, values)
    }

    pub fn spacing(&self, k: usize) -> f64 {
        let a = &self.axes[k];
        (a[a.len() - 1] - a[0]) / (a.len() - 1) as f64
    }

    fn contains(&self, w: &[f64]) -> bool {
        w.iter()
            .zip(&self.axes)
            .all(|(&x, a)| x >= a[0] - 1e-12 && x <= a[a.len() - 1] + 1e-12)
    }

    pub fn eval(&self, w: &[f64]) -> Result<CMat> {
        if w.len() != self.axes.len() {
            return Err(Error::Dimension("point length differs from grid rank".into()));
        }
        if !self.contains(w) {
            return Err(Error::Domain(format!("{w:?} outside the sampled lattice")));
        }
        let d = self.axes.len();
        let mut base = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for k in 0..d {
            let a = &self.axes[k];
            let h = self.spacing(k);
            let s = ((w[k] - a[0]) / h).clamp(0.0, (a.len() - 1) as f64);
            let i = (s.floor() as usize).min(a.len() - 2);
            base[k] = i;
            frac[k] = s - i as f64;
        }
        let mut out = CMat::zeros(self.dim, self.dim);
        for corner in 0..(1usize << d) {
            let mut weight = 1.0;
            let mut flat = 0usize;
            for k in 0..d {
                let bit = (corner >> k) & 1;
                weight *= if bit == 1 { frac[k] } else { 1.0 - frac[k] };
                flat = flat * self.axes[k].len() + base[k] + bit;
            }
            if weight != 0.0 {
                out += &self.values[flat] * re(weight);
            }
        }
        Ok(out)
    }

    /// `∂^α P(w)` by nested fourth-order central differences with step equal
    /// to the lattice spacing. A Richardson comparison against step 2h
    /// is available through [`GridSymbol::richardson_gap`].
    pub fn partial(&self, w: &[f64], alpha: &[usize]) -> Result<CMat> {
        self.partial_step(w, alpha, 1.0)
    }

    fn partial_step(&self, w: &[f64], alpha: &[usize], mult: f64) -> Result<CMat> {
        let Some(k) = alpha.iter().position(|&a| a > 0) else {
            return self.eval(w);
        };
        let h = self.spacing(k) * mult;
        let a = &self.axes[k];
        if w[k] - 2.0 * h < a[0] - 1e-12 || w[k] + 2.0 * h > a[a.len() - 1] + 1e-12 {
            return Err(Error::Stencil(format!(
                "coordinate {k} at {} needs ±{:.3e} inside [{}, {}]",
                w[k],
                2.0 * h,
                a[0],
                a[a.len() - 1]
            )));
        }
        let mut rest = alpha.to_vec();
        rest[k] -= 1;
        let at = |s: f64| -> Result<CMat> {
            let mut p = w.to_vec();
            p[k] += s;
            self.partial_step(&p, &rest, mult)
        };
        let d = (at(-2.0 * h)? - at(2.0 * h)? + (at(h)? - at(-h)?) * re(8.0)) * re(1.0 / (12.0 * h));
        Ok(d)
    }

    /// Relative gap between the step-h and step-2h first derivatives.
    pub fn richardson_gap(&self, w: &[f64], alpha: &[usize]) -> Result<f64> {
        let a = self.partial_step(w, alpha, 1.0)?;
        let b = self.partial_step(w, alpha, 2.0)?;
        let scale = a.norm().max(1e-300);
        Ok((a - b).norm() / scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lin(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn interpolation_is_exact_for_bilinear() {
        let g = GridSymbol::sample(1, vec![lin(11, -1.0, 1.0), lin(11, -1.0, 1.0)], |w| {
            CMat::from_element(1, 1, re(1.0 + 2.0 * w[0] - w[1] + w[0] * w[1]))
        })
        .unwrap();
        let v = g.eval(&[0.33, -0.71]).unwrap()[(0, 0)].re;
        assert!((v - (1.0 + 0.66 + 0.71 - 0.33 * 0.71)).abs() < 1e-12);
    }

    #[test]
    fn derivative_of_sampled_polynomial() {
        let g = GridSymbol::sample(1, vec![lin(201, -1.0, 1.0)], |w| {
            CMat::from_element(1, 1, re(w[0].powi(3)))
        })
        .unwrap();
        let d = g.partial(&[0.5], &[1]).unwrap()[(0, 0)].re;
        assert!((d - 0.75).abs() < 1e-8);
    }

    #[test]
    fn out_of_domain_and_stencil_errors() {
        let g = GridSymbol::sample(1, vec![lin(11, 0.0, 1.0)], |_| CMat::identity(1, 1)).unwrap();
        assert!(matches!(g.eval(&[1.5]), Err(Error::Domain(_))));
        assert!(matches!(g.partial(&[0.05], &[1]), Err(Error::Stencil(_))));
    }
}
