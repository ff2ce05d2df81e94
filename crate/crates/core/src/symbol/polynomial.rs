//! Matrix polynomials in the phase-space coordinates.

use std::collections::BTreeMap;

use crate::linalg::{re, CMat, C64};

/// Scalar polynomial: exponent vector → coefficient.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SPoly {
    pub nvars: usize,
    pub terms: BTreeMap<Vec<u32>, C64>,
}

impl SPoly {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, v: C64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], v);
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, re(1.0));
        p
    }

    pub fn add_term(&mut self, exps: Vec<u32>, v: C64) {
        let slot = self.terms.entry(exps).or_insert(C64::new(0.0, 0.0));
        *slot += v;
    }

    pub fn add(&self, o: &SPoly) -> SPoly {
        let mut p = self.clone();
        for (e, v) in &o.terms {
            p.add_term(e.clone(), *v);
        }
        p.prune()
    }

    pub fn sub(&self, o: &SPoly) -> SPoly {
        self.add(&o.scale(re(-1.0)))
    }

    pub fn scale(&self, s: C64) -> SPoly {
        let mut p = self.clone();
        for v in p.terms.values_mut() {
            *v *= s;
        }
        p.prune()
    }

    pub fn mul(&self, o: &SPoly) -> SPoly {
        let mut p = SPoly::zero(self.nvars);
        for (ea, va) in &self.terms {
            for (eb, vb) in &o.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                p.add_term(e, va * vb);
            }
        }
        p.prune()
    }

    pub fn pow(&self, k: u32) -> SPoly {
        let mut p = SPoly::constant(self.nvars, re(1.0));
        for _ in 0..k {
            p = p.mul(self);
        }
        p
    }

    fn prune(mut self) -> SPoly {
        self.terms.retain(|_, v| v.re != 0.0 || v.im != 0.0);
        self
    }
}

#[derive(Debug, Clone)]
pub struct Term {
    pub exps: Vec<u32>,
    pub coef: CMat,
}

/// `P(w) = Σ_α c_α w^α` with matrix coefficients.
#[derive(Debug, Clone)]
pub struct Polynomial {
    pub dim: usize,
    pub nvars: usize,
    pub terms: Vec<Term>,
}

impl Polynomial {
    pub fn constant(nvars: usize, m: CMat) -> Self {
        Self { dim: m.nrows(), nvars, terms: vec![Term { exps: vec![0; nvars], coef: m }] }
    }

    /// Assemble from a square table of scalar polynomials.
    pub fn from_entries(entries: &[Vec<SPoly>]) -> Self {
        let dim = entries.len();
        let nvars = entries[0][0].nvars;
        let mut map: BTreeMap<Vec<u32>, CMat> = BTreeMap::new();
        for (r, row) in entries.iter().enumerate() {
            assert_eq!(row.len(), dim, "polynomial table must be square");
            for (cidx, p) in row.iter().enumerate() {
                for (e, v) in &p.terms {
                    let m = map.entry(e.clone()).or_insert_with(|| CMat::zeros(dim, dim));
                    m[(r, cidx)] += v;
                }
            }
        }
        let terms = map.into_iter().map(|(exps, coef)| Term { exps, coef }).collect();
        Self { dim, nvars, terms }
    }

    pub fn eval(&self, w: &[f64]) -> CMat {
        self.partial(w, &vec![0; self.nvars])
    }

    /// `∂^α P(w)`, exact.
    pub fn partial(&self, w: &[f64], alpha: &[usize]) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        'terms: for t in &self.terms {
            let mut f = 1.0;
            for (k, (&e, &a)) in t.exps.iter().zip(alpha).enumerate() {
                let e = e as usize;
                if a > e {
                    continue 'terms;
                }
                for j in 0..a {
                    f *= (e - j) as f64;
                }
                f *= w[k].powi((e - a) as i32);
            }
            if f != 0.0 {
                out += &t.coef * re(f);
            }
        }
        out
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.exps.iter().sum::<u32>()).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn third_derivative_of_cube() {
        let t = SPoly::var(2, 0);
        let z = SPoly::zero(2);
        let p = Polynomial::from_entries(&[vec![t.pow(3), z.clone()], vec![z.clone(), z]]);
        let d = p.partial(&[0.0, 0.0], &[3, 0]);
        assert!((d[(0, 0)].re - 6.0).abs() < 1e-14);
    }

    #[test]
    fn spoly_algebra() {
        let t = SPoly::var(2, 0);
        let x = SPoly::var(2, 1);
        let p = t.sub(&x.scale(re(2.0))).pow(2);
        let m = Polynomial::from_entries(&[vec![p]]);
        let v = m.eval(&[1.0, 0.25]);
        assert!((v[(0, 0)].re - 0.25).abs() < 1e-14);
    }
}
