//! Matrix-valued symbols on phase space.

pub mod grid;
pub mod io;
pub mod models;
pub mod polynomial;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{re, CMat, C64};
pub use grid::GridSymbol;
pub use polynomial::{Polynomial, SPoly};

/// Adapted coordinates `(t, τ, x, ξ)` of a hypersurface chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptedSplit {
    pub t: f64,
    pub tau: f64,
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub coords: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<AdaptedSplit>,
}

impl PhasePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 || coords.len() % 2 != 0 {
            return Err(Error::Dimension(format!(
                "phase point needs an even number ≥ 2 of coordinates, got {}",
                coords.len()
            )));
        }
        Ok(Self { coords, split: None })
    }

    pub fn origin(phase_dim: usize) -> Self {
        Self { coords: vec![0.0; phase_dim], split: None }
    }

    pub fn with_chart(coords: Vec<f64>, chart: &HypersurfaceChart) -> Result<Self> {
        let mut p = Self::new(coords)?;
        p.split = Some(chart.split(&p.coords)?);
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn shifted(&self, k: usize, s: f64) -> Self {
        let mut c = self.coords.clone();
        c[k] += s;
        Self { coords: c, split: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentDirection {
    pub components: Vec<f64>,
    pub unit: bool,
}

impl TangentDirection {
    pub fn new(components: Vec<f64>) -> Self {
        Self { components, unit: false }
    }

    /// Normalized copy; `None` for the zero vector.
    pub fn unit(components: Vec<f64>) -> Option<Self> {
        let n = components.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n == 0.0 || !n.is_finite() {
            return None;
        }
        Some(Self { components: components.iter().map(|x| x / n).collect(), unit: true })
    }

    pub fn axis(dim: usize, k: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[k] = 1.0;
        Self { components: v, unit: true }
    }

    pub fn neg(&self) -> Self {
        Self { components: self.components.iter().map(|x| -x).collect(), unit: self.unit }
    }

    pub fn norm(&self) -> f64 {
        self.components.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Chart with `Σ = {τ = 0}`, `V = ∂_τ`; bicharacteristics are `t`-lines.
/// Coordinates are `(base, fiber)`, each of length `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypersurfaceChart {
    pub phase_dim: usize,
    pub t_index: usize,
    pub tau_index: usize,
}

impl HypersurfaceChart {
    /// `t` first in the base, `τ` first in the fiber.
    pub fn standard(phase_dim: usize) -> Self {
        Self { phase_dim, t_index: 0, tau_index: phase_dim / 2 }
    }

    pub fn transversal(&self) -> TangentDirection {
        TangentDirection::axis(self.phase_dim, self.tau_index)
    }

    pub fn x_indices(&self) -> Vec<usize> {
        (0..self.phase_dim / 2).filter(|&k| k != self.t_index).collect()
    }

    pub fn xi_indices(&self) -> Vec<usize> {
        (self.phase_dim / 2..self.phase_dim).filter(|&k| k != self.tau_index).collect()
    }

    /// Coordinates tangent to `Σ`.
    pub fn tangential_indices(&self) -> Vec<usize> {
        (0..self.phase_dim).filter(|&k| k != self.tau_index).collect()
    }

    pub fn split(&self, coords: &[f64]) -> Result<AdaptedSplit> {
        if coords.len() != self.phase_dim {
            return Err(Error::Dimension("point does not match chart".into()));
        }
        Ok(AdaptedSplit {
            t: coords[self.t_index],
            tau: coords[self.tau_index],
            x: self.x_indices().iter().map(|&k| coords[k]).collect(),
            xi: self.xi_indices().iter().map(|&k| coords[k]).collect(),
        })
    }

    pub fn assemble(&self, s: &AdaptedSplit) -> Vec<f64> {
        let mut c = vec![0.0; self.phase_dim];
        c[self.t_index] = s.t;
        c[self.tau_index] = s.tau;
        for (k, &i) in self.x_indices().iter().enumerate() {
            c[i] = s.x[k];
        }
        for (k, &i) in self.xi_indices().iter().enumerate() {
            c[i] = s.xi[k];
        }
        c
    }
}

#[derive(Debug, Clone)]
pub enum SymbolKind {
    Polynomial(Polynomial),
    Model { name: String, params: serde_json::Value, inner: Box<MatrixSymbol> },
    Grid(GridSymbol),
    /// `|w_k|` as a 1×1 symbol.
    Abs(usize),
    /// Ordered product; 1×1 factors act as scalars.
    Product(Vec<MatrixSymbol>),
    Sum(Vec<MatrixSymbol>),
    Scaled(C64, Box<MatrixSymbol>),
    Adjoint(Box<MatrixSymbol>),
}

#[derive(Debug, Clone)]
pub struct MatrixSymbol {
    pub dim: usize,
    pub phase_dim: usize,
    /// Marks symbols homogeneous in the fiber variables.
    pub homogeneous: bool,
    pub kind: SymbolKind,
}

fn multinomial_split(alpha: &[usize]) -> Vec<(Vec<usize>, f64)> {
    // all β ≤ α with the product of binomial coefficients
    let mut out = vec![(Vec::new(), 1.0)];
    for &a in alpha {
        let mut next = Vec::with_capacity(out.len() * (a + 1));
        for (b, w) in &out {
            let mut binom = 1.0;
            for j in 0..=a {
                let mut nb = b.clone();
                nb.push(j);
                next.push((nb, w * binom));
                binom = binom * (a - j) as f64 / (j + 1) as f64;
            }
        }
        out = next;
    }
    out
}

fn mul_broadcast(a: &CMat, b: &CMat) -> CMat {
    if a.nrows() == 1 && a.ncols() == 1 && b.nrows() != 1 {
        b * a[(0, 0)]
    } else if b.nrows() == 1 && b.ncols() == 1 && a.nrows() != 1 {
        a * b[(0, 0)]
    } else {
        a * b
    }
}

impl MatrixSymbol {
    pub fn polynomial(p: Polynomial) -> Self {
        Self { dim: p.dim, phase_dim: p.nvars, homogeneous: false, kind: SymbolKind::Polynomial(p) }
    }

    pub fn constant(phase_dim: usize, m: CMat) -> Self {
        Self::polynomial(Polynomial::constant(phase_dim, m))
    }

    pub fn grid(g: GridSymbol) -> Self {
        Self { dim: g.dim, phase_dim: g.axes.len(), homogeneous: false, kind: SymbolKind::Grid(g) }
    }

    pub fn abs_coordinate(phase_dim: usize, k: usize) -> Self {
        Self { dim: 1, phase_dim, homogeneous: false, kind: SymbolKind::Abs(k) }
    }

    pub fn product(factors: Vec<MatrixSymbol>) -> Self {
        let dim = factors.iter().map(|f| f.dim).max().unwrap_or(1);
        let phase_dim = factors[0].phase_dim;
        let homogeneous = factors.iter().all(|f| f.homogeneous);
        Self { dim, phase_dim, homogeneous, kind: SymbolKind::Product(factors) }
    }

    pub fn sum(terms: Vec<MatrixSymbol>) -> Self {
        let dim = terms[0].dim;
        let phase_dim = terms[0].phase_dim;
        let homogeneous = terms.iter().all(|f| f.homogeneous);
        Self { dim, phase_dim, homogeneous, kind: SymbolKind::Sum(terms) }
    }

    pub fn scaled(self, s: C64) -> Self {
        Self { dim: self.dim, phase_dim: self.phase_dim, homogeneous: self.homogeneous, kind: SymbolKind::Scaled(s, Box::new(self)) }
    }

    pub fn adjoint(self) -> Self {
        Self { dim: self.dim, phase_dim: self.phase_dim, homogeneous: self.homogeneous, kind: SymbolKind::Adjoint(Box::new(self)) }
    }

    pub fn with_homogeneous(mut self, h: bool) -> Self {
        self.homogeneous = h;
        self
    }

    pub fn model_name(&self) -> Option<&str> {
        match &self.kind {
            SymbolKind::Model { name, .. } => Some(name),
            _ => None,
        }
    }

    fn check(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.phase_dim {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, symbol expects {}",
                w.len(),
                self.phase_dim
            )));
        }
        Ok(())
    }

    pub fn eval(&self, w: &PhasePoint) -> Result<CMat> {
        self.eval_at(&w.coords)
    }

    pub fn eval_at(&self, w: &[f64]) -> Result<CMat> {
        self.check(w)?;
        self.partial_raw(w, &vec![0; self.phase_dim])
    }

    /// `∂^α P(w)`.
    pub fn partial(&self, w: &[f64], alpha: &[usize]) -> Result<CMat> {
        self.check(w)?;
        if alpha.len() != self.phase_dim {
            return Err(Error::Dimension("multi-index length differs from phase dimension".into()));
        }
        self.partial_raw(w, alpha)
    }

    fn partial_raw(&self, w: &[f64], alpha: &[usize]) -> Result<CMat> {
        let order: usize = alpha.iter().sum();
        match &self.kind {
            SymbolKind::Polynomial(p) => Ok(p.partial(w, alpha)),
            SymbolKind::Model { inner, .. } => inner.partial_raw(w, alpha),
            SymbolKind::Grid(g) => g.partial(w, alpha),
            SymbolKind::Abs(k) => {
                let x = w[*k];
                let v = if order == 0 {
                    x.abs()
                } else if order == 1 && alpha[*k] == 1 {
                    if x > 0.0 {
                        1.0
                    } else if x < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                } else {
                    0.0
                };
                Ok(CMat::from_element(1, 1, re(v)))
            }
            SymbolKind::Sum(ts) => {
                let mut acc = CMat::zeros(self.dim, self.dim);
                for t in ts {
                    acc += t.partial_raw(w, alpha)?;
                }
                Ok(acc)
            }
            SymbolKind::Scaled(s, inner) => Ok(inner.partial_raw(w, alpha)? * *s),
            SymbolKind::Adjoint(inner) => Ok(inner.partial_raw(w, alpha)?.adjoint()),
            SymbolKind::Product(fs) => {
                if fs.len() == 1 {
                    return fs[0].partial_raw(w, alpha);
                }
                let head = &fs[0];
                let tail = if fs.len() == 2 {
                    fs[1].clone()
                } else {
                    MatrixSymbol::product(fs[1..].to_vec())
                };
                let mut acc: Option<CMat> = None;
                for (beta, weight) in multinomial_split(alpha) {
                    let rest: Vec<usize> = alpha.iter().zip(&beta).map(|(a, b)| a - b).collect();
                    let a = head.partial_raw(w, &beta)?;
                    if a.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
                        continue;
                    }
                    let b = tail.partial_raw(w, &rest)?;
                    let term = mul_broadcast(&a, &b) * re(weight);
                    acc = Some(match acc {
                        Some(m) => m + term,
                        None => term,
                    });
                }
                Ok(acc.unwrap_or_else(|| CMat::zeros(self.dim, self.dim)))
            }
        }
    }

    /// `∂_ν P(w) = ⟨ν, dP(w)⟩`.
    pub fn directional_derivative(&self, w: &PhasePoint, nu: &TangentDirection) -> Result<CMat> {
        self.directional_derivative_n(w, nu, 1)
    }

    /// `(ν·∇)^k P(w)`.
    pub fn directional_derivative_n(&self, w: &PhasePoint, nu: &TangentDirection, k: usize) -> Result<CMat> {
        self.check(&w.coords)?;
        if nu.components.len() != self.phase_dim {
            return Err(Error::Dimension("direction length differs from phase dimension".into()));
        }
        let mut acc = CMat::zeros(self.dim, self.dim);
        for (alpha, coeff) in multi_indices(self.phase_dim, k) {
            let mut f = coeff;
            for (i, &a) in alpha.iter().enumerate() {
                f *= nu.components[i].powi(a as i32);
            }
            if f == 0.0 {
                continue;
            }
            acc += self.partial_raw(&w.coords, &alpha)? * re(f);
        }
        Ok(acc)
    }

    /// Gradient components `∂_i P(w)`.
    pub fn gradient(&self, w: &PhasePoint) -> Result<Vec<CMat>> {
        (0..self.phase_dim)
            .map(|i| {
                let mut a = vec![0; self.phase_dim];
                a[i] = 1;
                self.partial(&w.coords, &a)
            })
            .collect()
    }

    /// `w ↦ E*(w) Q(w) E(w)`.
    pub fn conjugate(&self, e: &MatrixSymbol) -> MatrixSymbol {
        MatrixSymbol::product(vec![e.clone().adjoint(), self.clone(), e.clone()])
    }

    /// `w ↦ −Q*(w)`.
    pub fn neg_adjoint(&self) -> MatrixSymbol {
        match &self.kind {
            SymbolKind::Scaled(s, inner) if *s == re(-1.0) => {
                if let SymbolKind::Adjoint(q) = &inner.kind {
                    return (**q).clone();
                }
                self.clone().adjoint().scaled(re(-1.0))
            }
            _ => self.clone().adjoint().scaled(re(-1.0)),
        }
    }

    /// `w ↦ A(w) P(w) B(w)`.
    pub fn sandwich(&self, a: &MatrixSymbol, b: &MatrixSymbol) -> MatrixSymbol {
        MatrixSymbol::product(vec![a.clone(), self.clone(), b.clone()])
    }
}

/// `E*QE` with a check that `E` is invertible where it is evaluated.
pub fn transform_conjugate(q: &MatrixSymbol, e: &MatrixSymbol, probe: &[PhasePoint]) -> Result<MatrixSymbol> {
    for w in probe {
        let m = e.eval(w)?;
        if crate::linalg::sigma_min(&m) <= 1e-12 * crate::linalg::op_norm(&m).max(1.0) {
            return Err(Error::Singular(format!("E is singular at {:?}", w.coords)));
        }
    }
    Ok(q.conjugate(e))
}

pub fn transform_negadjoint(q: &MatrixSymbol) -> MatrixSymbol {
    q.neg_adjoint()
}

/// Multi-indices of total order `k` with multinomial coefficients `k!/α!`.
pub fn multi_indices(n: usize, k: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n - 1 {
            cur.push(k);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for j in 0..=k {
            cur.push(j);
            rec(n, k - j, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, &mut Vec::new(), &mut out);
    let fact = |m: usize| (1..=m).map(|x| x as f64).product::<f64>();
    out.into_iter()
        .map(|a| {
            let c = fact(k) / a.iter().map(|&x| fact(x)).product::<f64>();
            (a, c)
        })
        .collect()
}

/// A one-parameter family of Hermitian matrices.
pub trait MatrixCurve: Sync {
    fn dim(&self) -> usize;
    fn at(&self, t: f64) -> Result<CMat>;
}

pub struct FnCurve<F: Fn(f64) -> CMat + Sync> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(f64) -> CMat + Sync> FnCurve<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(f64) -> CMat + Sync> MatrixCurve for FnCurve<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn at(&self, t: f64) -> Result<CMat> {
        Ok((self.f)(t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinePart {
    Full,
    Re,
    Im,
}

/// Restriction of a symbol to the line `w(t) = base + t·e_index`.
pub struct SymbolLine<'a> {
    pub symbol: &'a MatrixSymbol,
    pub base: Vec<f64>,
    pub index: usize,
    pub part: LinePart,
}

impl MatrixCurve for SymbolLine<'_> {
    fn dim(&self) -> usize {
        self.symbol.dim
    }
    fn at(&self, t: f64) -> Result<CMat> {
        let mut w = self.base.clone();
        w[self.index] = t;
        let m = self.symbol.eval_at(&w)?;
        Ok(match self.part {
            LinePart::Full => m,
            LinePart::Re => crate::linalg::hermitian_split(&m).0,
            LinePart::Im => crate::linalg::hermitian_split(&m).1,
        })
    }
}
