//! Desk-scale discretizations of `h D_t M(t) + i F(t)` and the subex family,
//! smallest singular values and `σ_min ≍ h^γ` sweeps.

mod subex;

pub use subex::{default_subex_h_grid, subellipticity_matrix, SubexModel, SubexPoint, SUBEX_CAP};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{loglog_fit, logspace};
use crate::linalg::{self, CMat, C64, I};
use crate::sparse::{SparseLu, SparseMatrix};
use crate::symbol::models::model_library;
use crate::symbol::{HypersurfaceChart, MatrixSymbol, PhasePoint, TangentDirection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Dirichlet,
    Periodic,
}

/// Block-diagonal operator; blocks are independent components.
#[derive(Debug, Clone)]
pub struct DiscretizedOperator {
    pub blocks: Vec<SparseMatrix>,
    pub h: f64,
    pub window: (f64, f64),
    pub boundary: Boundary,
    pub order: usize,
    pub n_t: usize,
    pub n_x: usize,
}

impl DiscretizedOperator {
    pub fn size(&self) -> usize {
        self.blocks.iter().map(|b| b.n).sum()
    }

    /// The assembled block-diagonal matrix.
    pub fn matrix(&self) -> SparseMatrix {
        let mut m = SparseMatrix::new(self.size());
        let mut off = 0;
        for b in &self.blocks {
            for &(i, j, v) in &b.entries {
                m.push(off + i, off + j, v);
            }
            off += b.n;
        }
        m
    }
}

/// Centered first-difference weights `(offset, weight)` for `d/dt`.
pub fn stencil(order: usize) -> Result<Vec<(isize, f64)>> {
    match order {
        2 => Ok(vec![(-1, -0.5), (1, 0.5)]),
        4 => Ok(vec![(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)]),
        _ => Err(Error::InvalidParams(format!("stencil order {order} not supported (2 or 4)"))),
    }
}

/// Grid nodes: interior points for Dirichlet, `n` periodic nodes otherwise.
pub fn t_grid(window: (f64, f64), n: usize, boundary: Boundary) -> (Vec<f64>, f64) {
    let len = window.1 - window.0;
    match boundary {
        Boundary::Dirichlet => {
            let dt = len / (n + 1) as f64;
            ((0..n).map(|i| window.0 + (i + 1) as f64 * dt).collect(), dt)
        }
        Boundary::Periodic => {
            let dt = len / n as f64;
            ((0..n).map(|i| window.0 + i as f64 * dt).collect(), dt)
        }
    }
}

/// `M(t)·hD_t + P(t, τ=0)` for a symbol affine in `τ`; layout t-major,
/// component-minor.
pub fn discretize_model(
    p: &MatrixSymbol,
    base: &PhasePoint,
    chart: &HypersurfaceChart,
    h: f64,
    n_t: usize,
    window: (f64, f64),
    boundary: Boundary,
    order: usize,
) -> Result<DiscretizedOperator> {
    if n_t < 256 {
        return Err(Error::InvalidParams("n_t must be at least 256".into()));
    }
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::InvalidParams("h must lie in (0, 1]".into()));
    }
    let st = stencil(order)?;
    let n = p.dim;
    let (ts, dt) = t_grid(window, n_t, boundary);
    let tau = TangentDirection::axis(p.phase_dim, chart.tau_index);
    let mut a = SparseMatrix::new(n * n_t);
    for (i, &t) in ts.iter().enumerate() {
        let mut w = base.coords.clone();
        w[chart.t_index] = t;
        w[chart.tau_index] = 0.0;
        let pt = PhasePoint { coords: w, split: None };
        let p0 = p.eval(&pt)?;
        let m = p.directional_derivative(&pt, &tau)?;
        for r in 0..n {
            for c in 0..n {
                a.push(i * n + r, i * n + c, p0[(r, c)]);
            }
        }
        for &(off, wt) in &st {
            let j = i as isize + off;
            let j = match boundary {
                Boundary::Dirichlet if j < 0 || j >= n_t as isize => continue,
                Boundary::Dirichlet => j as usize,
                Boundary::Periodic => j.rem_euclid(n_t as isize) as usize,
            };
            // hD_t = −ih d/dt
            let coef = -I * (h * wt / dt);
            for r in 0..n {
                for c in 0..n {
                    a.push(i * n + r, j * n + c, m[(r, c)] * coef);
                }
            }
        }
    }
    Ok(DiscretizedOperator { blocks: vec![a], h, window, boundary, order, n_t, n_x: 1 })
}

pub const DENSE_MAX: usize = 512;
pub const SIGMA_TOL: f64 = 1e-10;
pub const SIGMA_MAX_ITERS: usize = 500;
/// Krylov dimension per restart cycle.
const KRYLOV: usize = 40;

pub fn sigma_min_sparse(a: &SparseMatrix) -> Result<f64> {
    if a.n == 0 {
        return Ok(0.0);
    }
    if a.n <= DENSE_MAX {
        return Ok(linalg::sigma_min(&a.to_dense()));
    }
    let lu = match SparseLu::new(a) {
        Ok(lu) => lu,
        Err(Error::Singular(_)) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let mu = lanczos_max(|v| lu.solve(&lu.solve_adjoint(v)), a.n, 0x5eed)?;
    Ok(1.0 / mu.sqrt())
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest eigenvalue of a Hermitian positive operator by restarted Lanczos
/// with full reorthogonalization. One iteration is one restart cycle.
/// Converged when the Ritz residual, or two consecutive relative changes of
/// the Ritz value, fall below [`SIGMA_TOL`].
fn lanczos_max(apply: impl Fn(&[C64]) -> Vec<C64>, n: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = linalg::random_cmat(&mut rng, n, 1);
    let mut v: Vec<C64> = x0.column(0).iter().copied().collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|z| *z /= nv);
    let m = KRYLOV.min(n);
    let mut prev = 0.0;
    let mut stalls = 0;
    let mut residual = f64::INFINITY;
    for _ in 0..SIGMA_MAX_ITERS {
        let mut basis: Vec<Vec<C64>> = vec![v.clone()];
        let mut alpha = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        loop {
            let j = basis.len() - 1;
            let mut w = apply(&basis[j]);
            alpha.push(dot(&basis[j], &w).re);
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    w.iter_mut().zip(q).for_each(|(z, qq)| *z -= c * qq);
                }
            }
            let bn = norm(&w);
            beta.push(bn);
            if basis.len() == m || bn <= 1e-14 * alpha[0].abs().max(f64::MIN_POSITIVE) {
                break;
            }
            w.iter_mut().for_each(|z| *z /= bn);
            basis.push(w);
        }
        let k = alpha.len();
        let t = CMat::from_fn(k, k, |i, j| {
            if i == j {
                linalg::re(alpha[i])
            } else if i + 1 == j {
                linalg::re(beta[i])
            } else if j + 1 == i {
                linalg::re(beta[j])
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let (vals, vecs) = linalg::eigh(&t);
        let theta = vals[k - 1];
        if !(theta > 0.0) {
            return Err(Error::NoConvergence { iters: 0, residual: f64::NAN });
        }
        residual = beta[k - 1] * vecs[(k - 1, k - 1)].norm() / theta;
        let change = (theta - prev).abs() / theta;
        prev = theta;
        stalls = if change <= SIGMA_TOL { stalls + 1 } else { 0 };
        if residual <= SIGMA_TOL || stalls >= 2 {
            return Ok(theta);
        }
        let mut nv = vec![C64::new(0.0, 0.0); n];
        for (q, c) in basis.iter().zip(vecs.column(k - 1).iter()) {
            nv.iter_mut().zip(q).for_each(|(z, qq)| *z += c * qq);
        }
        let s = norm(&nv);
        nv.iter_mut().for_each(|z| *z /= s);
        v = nv;
    }
    Err(Error::NoConvergence { iters: SIGMA_MAX_ITERS, residual })
}

pub fn sigma_min(op: &DiscretizedOperator) -> Result<f64> {
    let mut s = f64::INFINITY;
    for b in &op.blocks {
        s = s.min(sigma_min_sparse(b)?);
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingVerdict {
    Gain,
    NoGain,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub h_grid: Vec<f64>,
    pub sizes: Vec<usize>,
    pub n_t: Vec<usize>,
    pub sigma_mins: Vec<f64>,
    pub gamma_hat: f64,
    pub fit_r2: f64,
    pub predicted: Option<f64>,
    pub unreliable_fit: bool,
    pub subelliptic_verdict: ScalingVerdict,
}

pub const GAIN_GAMMA: f64 = 0.97;
pub const GAIN_R2: f64 = 0.99;

/// Anything that yields an operator per `h`.
pub trait SweepModel: Sync {
    fn discretize(&self, h: f64) -> Result<DiscretizedOperator>;
}

/// `n_t = max(min, 2·⌈coef·L·h^{−power}/2⌉)` on a window of length `L`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NtRule {
    pub min: usize,
    pub coef: f64,
    pub power: f64,
}

impl Default for NtRule {
    fn default() -> Self {
        Self { min: 256, coef: 32.0, power: 1.0 / 3.0 }
    }
}

impl NtRule {
    pub fn n_t(&self, len: f64, h: f64) -> usize {
        let raw = (self.coef * len * h.powf(-self.power) / 2.0).ceil() as usize * 2;
        raw.max(self.min)
    }
}

/// `hD_t M(t) + P(t, 0)` along the `t`-line through `base`.
#[derive(Debug, Clone)]
pub struct LineModel {
    pub symbol: MatrixSymbol,
    pub base: PhasePoint,
    pub chart: HypersurfaceChart,
    pub window: (f64, f64),
    pub boundary: Boundary,
    pub order: usize,
    pub rule: NtRule,
}

impl LineModel {
    pub fn new(symbol: MatrixSymbol, base: PhasePoint) -> Self {
        let chart = HypersurfaceChart::standard(symbol.phase_dim);
        Self { symbol, base, chart, window: (-2.0, 2.0), boundary: Boundary::Dirichlet, order: 2, rule: NtRule::default() }
    }

    /// Model operators by name: `scalar` (`k`), `ex1`, `ex2`, `t2`, `zero`,
    /// `id`, or any library model affine in `τ`.
    pub fn named(name: &str, params: &serde_json::Value) -> Result<Self> {
        let (sym, base) = match name {
            "ex1" | "ex2" | "t2" | "zero" | "id" => {
                (model_library("simplex", &serde_json::json!({ "f": name }))?, vec![0.0, 0.0, 0.0, 1.0])
            }
            _ => {
                let s = model_library(name, params)?;
                let pd = s.phase_dim;
                let mut b = vec![0.0; pd];
                if pd >= 4 {
                    b[pd - 1] = 1.0;
                }
                (s, b)
            }
        };
        Ok(Self::new(sym, PhasePoint::new(base)?))
    }

    pub fn n_t(&self, h: f64) -> usize {
        self.rule.n_t(self.window.1 - self.window.0, h)
    }
}

impl SweepModel for LineModel {
    fn discretize(&self, h: f64) -> Result<DiscretizedOperator> {
        discretize_model(&self.symbol, &self.base, &self.chart, h, self.n_t(h), self.window, self.boundary, self.order)
    }
}

pub fn default_h_grid() -> Vec<f64> {
    logspace(1e-4, 1e-1, 8)
}

pub fn scaling_sweep(model: &dyn SweepModel, h_grid: &[f64], predicted: Option<f64>) -> Result<ScalingReport> {
    if h_grid.len() < 6 {
        return Err(Error::InvalidParams("need at least 6 values of h".into()));
    }
    let mut hs = h_grid.to_vec();
    hs.sort_by(|a, b| b.total_cmp(a));
    let mut sizes = Vec::new();
    let mut nts = Vec::new();
    let mut sig = Vec::new();
    for &h in &hs {
        let op = model.discretize(h)?;
        sizes.push(op.size());
        nts.push(op.n_t);
        sig.push(sigma_min(&op)?);
    }
    if sig.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::Singular("discretized operator is singular".into()));
    }
    let fit = loglog_fit(&hs, &sig);
    let gain = fit.slope <= GAIN_GAMMA && fit.r2 >= GAIN_R2;
    Ok(ScalingReport {
        h_grid: hs,
        sizes,
        n_t: nts,
        sigma_mins: sig,
        gamma_hat: fit.slope,
        fit_r2: fit.r2,
        predicted,
        unreliable_fit: fit.r2 < 0.95,
        subelliptic_verdict: if gain { ScalingVerdict::Gain } else { ScalingVerdict::NoGain },
    })
}

/// Dense σ_min of a matrix (oracle path, any size).
pub fn dense_sigma_min(a: &SparseMatrix) -> f64 {
    linalg::sigma_min(&a.to_dense())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn scalar_rows_reproduce_damping_on_constants() {
        let m = LineModel::named("scalar", &json!({"k": 2})).unwrap();
        let op = discretize_model(&m.symbol, &m.base, &m.chart, 1e-2, 1024, (-2.0, 2.0), Boundary::Dirichlet, 2).unwrap();
        assert_eq!(op.size(), 1024);
        let ones = vec![C64::new(1.0, 0.0); 1024];
        let y = op.matrix().matvec(&ones);
        let (ts, _) = t_grid((-2.0, 2.0), 1024, Boundary::Dirichlet);
        for i in 1..1023 {
            assert!((y[i] - I * ts[i] * ts[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn ex2_shape() {
        let m = LineModel::named("ex2", &json!(null)).unwrap();
        let op = discretize_model(&m.symbol, &m.base, &m.chart, 1e-2, 1024, (-2.0, 2.0), Boundary::Dirichlet, 2).unwrap();
        assert_eq!(op.size(), 2048);
    }

    #[test]
    fn sigma_small_cases() {
        let z = SparseMatrix::new(3);
        assert_eq!(sigma_min_sparse(&z).unwrap(), 0.0);
        let mut d = SparseMatrix::new(3);
        for (i, v) in [3.0, 5.0, 7.0].iter().enumerate() {
            d.push(i, i, linalg::re(*v));
        }
        assert!((sigma_min_sparse(&d).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn iterative_matches_dense() {
        let m = LineModel::named("scalar", &json!({"k": 2})).unwrap();
        for (n, bc, ord) in [(600, Boundary::Dirichlet, 2), (700, Boundary::Periodic, 4)] {
            let op = discretize_model(&m.symbol, &m.base, &m.chart, 1e-2, n, (-2.0, 2.0), bc, ord).unwrap();
            let it = sigma_min(&op).unwrap();
            let dense = dense_sigma_min(&op.blocks[0]);
            assert!((it / dense - 1.0).abs() < 1e-8, "{it} {dense}");
        }
    }

    #[test]
    fn free_derivative_scales_like_h() {
        let m = LineModel::named("zero", &json!(null)).unwrap();
        let r = scaling_sweep(&m, &logspace(1e-3, 1e-1, 6), None).unwrap();
        assert!((r.gamma_hat - 1.0).abs() < 0.02);
        assert_eq!(r.subelliptic_verdict, ScalingVerdict::NoGain);
    }

    #[test]
    fn elliptic_control() {
        let m = LineModel::named("id", &json!(null)).unwrap();
        let r = scaling_sweep(&m, &logspace(1e-3, 1e-1, 6), None).unwrap();
        assert!(r.sigma_mins.iter().all(|&s| s > 0.9));
        assert!(r.gamma_hat.abs() < 0.02);
    }
}
