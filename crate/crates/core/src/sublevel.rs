//! Sublevel-set measures `|{t : λ_min(F(t)) ≤ δ}|`, exponent fits and the
//! derivative order of `⟨F u, u⟩`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{line_fit, loglog_fit, logspace, pairwise_sum};
use crate::linalg::{self, CMat, CVec};
use crate::symbol::MatrixCurve;

pub const HERM_TOL: f64 = 1e-10;
pub const FIT_TOL: f64 = 0.02;
pub const DEFAULT_GRID: usize = 100_000;

/// `λ_min(F(t_i))` on `n` uniform nodes of the window, with the Hermitian and
/// PSD checks.
pub fn lambda_min_samples(f: &dyn MatrixCurve, window: (f64, f64), n: usize) -> Result<Vec<f64>> {
    if n < 2 || window.1 <= window.0 {
        return Err(Error::InvalidParams("need n_grid ≥ 2 and a nonempty window".into()));
    }
    let dt = (window.1 - window.0) / (n - 1) as f64;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let t = window.0 + i as f64 * dt;
            let m = f.at(t)?;
            let scale = linalg::op_norm(&m).max(1.0);
            if linalg::max_abs(&(&m - m.adjoint())) > HERM_TOL * scale {
                return Err(Error::Input(format!("F({t}) is not Hermitian")));
            }
            let l = linalg::lambda_min(&m);
            if l < -HERM_TOL * scale {
                return Err(Error::Input(format!("F({t}) has eigenvalue {l:.3e} < 0")));
            }
            Ok(l)
        })
        .collect()
}

/// Measure of `{g ≤ δ}` for the piecewise-linear interpolant of the samples.
pub fn measure_from_samples(lams: &[f64], dt: f64, delta: f64) -> f64 {
    let pieces: Vec<f64> = lams
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0] - delta, w[1] - delta);
            match (a <= 0.0, b <= 0.0) {
                (true, true) => dt,
                (false, false) => 0.0,
                (true, false) => dt * (-a) / (b - a),
                (false, true) => dt * (-b) / (a - b),
            }
        })
        .collect();
    pairwise_sum(&pieces)
}

pub fn omega_delta_measure(f: &dyn MatrixCurve, delta: f64, window: (f64, f64), n_grid: usize) -> Result<f64> {
    if delta <= 0.0 {
        return Err(Error::InvalidParams("delta must be positive".into()));
    }
    let lams = lambda_min_samples(f, window, n_grid)?;
    Ok(measure_from_samples(&lams, (window.1 - window.0) / (n_grid - 1) as f64, delta))
}

#[derive(Debug, Clone, Serialize)]
pub struct SublevelReport {
    pub delta_grid: Vec<f64>,
    pub measures: Vec<f64>,
    pub window: (f64, f64),
    /// `+∞` when every measure vanishes.
    pub mu_hat: f64,
    pub fit_r2: f64,
    /// Difference of the slopes fitted on the lower and upper halves of the
    /// δ-grid.
    pub slope_drift: f64,
    pub k_inferred: Option<u32>,
    pub saturated: bool,
}

impl SublevelReport {
    pub fn elliptic(&self) -> bool {
        self.mu_hat.is_infinite()
    }
}

pub fn fit_sublevel_exponent(
    f: &dyn MatrixCurve,
    window: (f64, f64),
    delta_range: (f64, f64),
    n_deltas: usize,
    n_grid: usize,
) -> Result<SublevelReport> {
    let (lo, hi) = delta_range;
    if !(lo > 0.0 && hi <= 1.0 && lo < hi) {
        return Err(Error::InvalidParams("delta range must lie in (0, 1]".into()));
    }
    if n_deltas < 8 {
        return Err(Error::InvalidParams("need at least 8 deltas".into()));
    }
    let lams = lambda_min_samples(f, window, n_grid)?;
    let dt = (window.1 - window.0) / (n_grid - 1) as f64;
    let delta_grid = logspace(lo, hi, n_deltas);
    let measures: Vec<f64> = delta_grid.iter().map(|&d| measure_from_samples(&lams, dt, d)).collect();
    let len = window.1 - window.0;
    let saturated = measures.iter().all(|&m| (m - len).abs() <= 1e-12 * len);
    let mut report = SublevelReport {
        delta_grid,
        measures,
        window,
        mu_hat: 0.0,
        fit_r2: 1.0,
        slope_drift: 0.0,
        k_inferred: None,
        saturated,
    };
    if saturated {
        return Ok(report);
    }
    if report.measures.iter().all(|&m| m == 0.0) {
        report.mu_hat = f64::INFINITY;
        return Ok(report);
    }
    let fit = loglog_fit(&report.delta_grid, &report.measures);
    report.mu_hat = fit.slope;
    report.fit_r2 = fit.r2;
    let pos: Vec<(f64, f64)> = report
        .delta_grid
        .iter()
        .zip(&report.measures)
        .filter(|(_, &m)| m > 0.0)
        .map(|(&d, &m)| (d.ln(), m.ln()))
        .collect();
    if pos.len() >= 6 {
        let h = pos.len() / 2;
        let (a, b) = pos.split_at(h);
        let sl = |v: &[(f64, f64)]| {
            let (x, y): (Vec<f64>, Vec<f64>) = v.iter().copied().unzip();
            line_fit(&x, &y).slope
        };
        report.slope_drift = (sl(b) - sl(a)).abs();
    }
    if fit.r2 >= 0.99 && fit.slope > 0.0 && report.slope_drift <= FIT_TOL {
        let k = 2 * ((1.0 / fit.slope) / 2.0).round() as u32;
        if k >= 2 && (fit.slope - 1.0 / k as f64).abs() <= FIT_TOL {
            report.k_inferred = Some(k);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UStrategy {
    MinEigvec,
    Random(usize),
    Both(usize),
}

impl Default for UStrategy {
    fn default() -> Self {
        UStrategy::Both(32)
    }
}

#[derive(Debug, Clone)]
pub struct DerivativeParams {
    pub k_max: usize,
    pub strategy: UStrategy,
    pub grid: usize,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for DerivativeParams {
    fn default() -> Self {
        Self { k_max: 10, strategy: UStrategy::default(), grid: 201, threshold: 1e-6, seed: 0x5eed }
    }
}

const NODES: usize = 41;
const NOISE: f64 = 1e-9;

/// Derivatives `g^{(j)}(0)`, `j ≤ deg`, from a least-squares fit on
/// Chebyshev nodes of `[−r, r]`.
fn local_derivatives(vals: &[f64], r: f64, deg: usize) -> Vec<f64> {
    let n = vals.len();
    let xs: Vec<f64> = (0..n).map(|i| -(std::f64::consts::PI * (i as f64 + 0.5) / n as f64).cos()).collect();
    let a = nalgebra::DMatrix::from_fn(n, deg + 1, |i, j| xs[i].powi(j as i32));
    let b = nalgebra::DVector::from_column_slice(vals);
    let coef = a.svd(true, true).solve(&b, 1e-14).expect("svd solve");
    let mut fact = 1.0;
    (0..=deg)
        .map(|j| {
            if j > 0 {
                fact *= j as f64;
            }
            fact * coef[j] / r.powi(j as i32)
        })
        .collect()
}

fn node_offsets(r: f64) -> Vec<f64> {
    (0..NODES).map(|i| -r * (std::f64::consts::PI * (i as f64 + 0.5) / NODES as f64).cos()).collect()
}

/// Smallest even `k ≤ k_max` with `Σ_{j≤k} |∂^j ⟨F u, u⟩| > threshold·scale`
/// at every tested point and vector.
pub fn derivative_order(f: &dyn MatrixCurve, window: (f64, f64), params: &DerivativeParams) -> Result<Option<u32>> {
    if params.k_max % 2 != 0 {
        return Err(Error::InvalidParams("k_max must be even".into()));
    }
    let n = params.grid.max(3);
    let len = window.1 - window.0;
    let mut ts: Vec<f64> = (0..n).map(|i| window.0 + len * i as f64 / (n - 1) as f64).collect();
    // the minimizer of λ_min on a finer grid, which the coarse grid may miss
    let fine = lambda_min_samples(f, window, 20 * n)?;
    let (imin, _) = fine.iter().enumerate().fold((0, f64::INFINITY), |b, (i, &v)| if v < b.1 { (i, v) } else { b });
    ts.push(window.0 + len * imin as f64 / (20 * n - 1) as f64);

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (use_min, m) = match params.strategy {
        UStrategy::MinEigvec => (true, 0),
        UStrategy::Random(m) => (false, m),
        UStrategy::Both(m) => (true, m),
    };
    let us: Vec<CVec> = (0..m).map(|_| linalg::random_unit(&mut rng, f.dim())).collect();
    let r = (len / 8.0).min(0.25);
    let deg = (params.k_max + 4).min(24);
    let offs = node_offsets(r);
    let scale = ts
        .iter()
        .map(|&t| f.at(t).map(|x| linalg::op_norm(&x)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(1.0, f64::max);
    let thr = params.threshold * scale;
    // rounding noise in the samples is amplified by j!/r^j in the j-th term
    let mut floor = Vec::with_capacity(deg + 1);
    let mut fj = 1.0;
    for j in 0..=deg {
        if j > 0 {
            fj *= j as f64 / r;
        }
        floor.push(NOISE * scale * fj);
    }

    // per point, per vector: derivative list
    let derivs: Vec<Vec<Vec<f64>>> = ts
        .par_iter()
        .map(|&t| -> Result<Vec<Vec<f64>>> {
            let mats: Vec<CMat> = offs.iter().map(|&o| f.at(t + o)).collect::<Result<_>>()?;
            let mut out = Vec::new();
            if use_min {
                let v: Vec<f64> = mats.iter().map(linalg::lambda_min).collect();
                out.push(local_derivatives(&v, r, deg));
            }
            for u in &us {
                let v: Vec<f64> = mats.iter().map(|a| (u.adjoint() * a * u)[(0, 0)].re).collect();
                out.push(local_derivatives(&v, r, deg));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    for k in (0..=params.k_max).step_by(2) {
        let ok = derivs
            .iter()
            .all(|per_t| {
                per_t.iter().all(|d| {
                    d[..=k].iter().zip(&floor).map(|(x, fl)| if x.abs() > *fl { x.abs() } else { 0.0 }).sum::<f64>()
                        > thr
                })
            });
        if ok {
            return Ok(Some(k as u32));
        }
    }
    Ok(None)
}
