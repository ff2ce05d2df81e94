//! The `(α, β)` family `τ + α·diag(ξ, −ξ) + i(t − βx)²|ξ|` on a 2-D grid.
//!
//! Each component `s = ±1` is `hD_t + sα·hD_x + i(t − βx)²` with `|ξ|` frozen
//! at the carrier. The transport part is differenced along its characteristic
//! so the grid steps satisfy `dx = |α|·dt`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{scaling_sweep, Boundary, DiscretizedOperator, ScalingReport, ScalingVerdict, SweepModel};
use crate::error::{Error, Result};
use crate::fit::logspace;
use crate::linalg::{C64, I};
use crate::sparse::SparseMatrix;

pub const SUBEX_CAP: usize = 128 * 128;
pub const SUBEX_T_HALF: f64 = 1.0;
pub const SUBEX_X_HALF: f64 = 1.5;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubexModel {
    pub alpha: f64,
    pub beta: f64,
    /// Per-component cap on `n_t·n_x`.
    pub cap: usize,
    /// Explicit `(n_t, n_x)`; otherwise the largest even `n_t ≤ 256` under the cap.
    #[serde(default)]
    pub grid: Option<(usize, usize)>,
}

impl SubexModel {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta, cap: SUBEX_CAP, grid: None }
    }

    fn steps(&self, n_t: usize) -> (f64, f64) {
        let dt = 2.0 * SUBEX_T_HALF / (n_t + 1) as f64;
        let dx = if self.alpha == 0.0 { dt } else { self.alpha.abs() * dt };
        (dt, dx)
    }

    fn auto_nx(&self, n_t: usize) -> usize {
        let (_, dx) = self.steps(n_t);
        2 * (SUBEX_X_HALF / dx).ceil() as usize
    }

    /// `(n_t, n_x, dt, dx)`.
    pub fn dims(&self) -> Result<(usize, usize, f64, f64)> {
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(Error::InvalidParams("subex requires real α, β".into()));
        }
        let (n_t, n_x) = match self.grid {
            Some((nt, nx)) => (nt, nx),
            None => {
                let mut nt = 256;
                while nt > 2 && nt * self.auto_nx(nt) > self.cap {
                    nt -= 2;
                }
                (nt, self.auto_nx(nt))
            }
        };
        if n_t * n_x > self.cap {
            return Err(Error::Size(format!("subex grid {n_t}×{n_x} exceeds cap {}", self.cap)));
        }
        if n_t < 4 || n_x < 2 {
            return Err(Error::Size(format!("subex grid {n_t}×{n_x} too small")));
        }
        let (dt, dx) = self.steps(n_t);
        Ok((n_t, n_x, dt, dx))
    }

    /// One component `s = ±1`; index `i·n_x + k`.
    pub fn component(&self, h: f64, s: i32) -> Result<SparseMatrix> {
        let (n_t, n_x, dt, dx) = self.dims()?;
        let sh: isize = if self.alpha == 0.0 { 0 } else { (self.alpha.signum() as isize) * s as isize };
        let ct = (n_t as f64 - 1.0) / 2.0;
        let cx = (n_x as f64 - 1.0) / 2.0;
        let coef = C64::new(h / (2.0 * dt), 0.0) / I;
        let mut a = SparseMatrix::new(n_t * n_x);
        for i in 0..n_t {
            let t = (i as f64 - ct) * dt;
            for k in 0..n_x {
                let x = (k as f64 - cx) * dx;
                let r = i * n_x + k;
                let d = t - self.beta * x;
                a.push(r, r, I * d * d);
                let kp = k as isize + sh;
                if i + 1 < n_t && kp >= 0 && (kp as usize) < n_x {
                    a.push(r, (i + 1) * n_x + kp as usize, coef);
                }
                let km = k as isize - sh;
                if i > 0 && km >= 0 && (km as usize) < n_x {
                    a.push(r, (i - 1) * n_x + km as usize, -coef);
                }
            }
        }
        Ok(a)
    }

    pub fn predicted(&self) -> f64 {
        if self.alpha == 0.0 || (self.alpha * self.beta).abs() != 1.0 {
            2.0 / 3.0
        } else {
            1.0
        }
    }
}

impl SweepModel for SubexModel {
    fn discretize(&self, h: f64) -> Result<DiscretizedOperator> {
        if !(h > 0.0 && h <= 1.0) {
            return Err(Error::InvalidParams("h must lie in (0, 1]".into()));
        }
        let (n_t, n_x, _, _) = self.dims()?;
        Ok(DiscretizedOperator {
            blocks: vec![self.component(h, 1)?, self.component(h, -1)?],
            h,
            window: (-SUBEX_T_HALF, SUBEX_T_HALF),
            boundary: Boundary::Dirichlet,
            order: 2,
            n_t,
            n_x,
        })
    }
}

pub fn default_subex_h_grid() -> Vec<f64> {
    logspace(1e-3, 1e-1, 8)
}

#[derive(Debug, Clone, Serialize)]
pub struct SubexPoint {
    pub alpha: f64,
    pub beta: f64,
    pub expected: ScalingVerdict,
    pub report: ScalingReport,
}

impl SubexPoint {
    pub fn matches(&self) -> bool {
        self.report.subelliptic_verdict == self.expected
    }
}

/// Scaling sweep at every `(α, β)`; rows in `alphas`-major order.
pub fn subellipticity_matrix(alphas: &[f64], betas: &[f64], h_grid: &[f64], cap: usize) -> Result<Vec<SubexPoint>> {
    let pts: Vec<(f64, f64)> = alphas.iter().flat_map(|&a| betas.iter().map(move |&b| (a, b))).collect();
    pts.par_iter()
        .map(|&(alpha, beta)| {
            let m = SubexModel { cap, ..SubexModel::new(alpha, beta) };
            let pred = m.predicted();
            let report = scaling_sweep(&m, h_grid, Some(pred))?;
            let expected = if pred < 0.97 { ScalingVerdict::Gain } else { ScalingVerdict::NoGain };
            Ok(SubexPoint { alpha, beta, expected, report })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_wave_interior() {
        let m = SubexModel { grid: Some((40, 60)), ..SubexModel::new(1.0, 1.0) };
        let (n_t, n_x, dt, dx) = m.dims().unwrap();
        assert_eq!(m.discretize(0.01).unwrap().size(), 2 * 40 * 60);
        let (h, om, ka) = (0.05, 3.0, 2.0);
        for s in [1, -1] {
            let a = m.component(h, s).unwrap();
            let ct = (n_t as f64 - 1.0) / 2.0;
            let cx = (n_x as f64 - 1.0) / 2.0;
            let mut u = vec![C64::new(0.0, 0.0); n_t * n_x];
            for i in 0..n_t {
                for k in 0..n_x {
                    let (t, x) = ((i as f64 - ct) * dt, (k as f64 - cx) * dx);
                    u[i * n_x + k] = (I * (om * t + ka * x)).exp();
                }
            }
            let y = a.matvec(&u);
            let sym = h * ((om + s as f64 * m.alpha * ka) * dt).sin() / dt;
            for i in 1..n_t - 1 {
                for k in 1..n_x - 1 {
                    let (t, x) = ((i as f64 - ct) * dt, (k as f64 - cx) * dx);
                    let d = t - m.beta * x;
                    let want = (C64::new(sym, 0.0) + I * d * d) * u[i * n_x + k];
                    assert!((y[i * n_x + k] - want).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn cap_respected() {
        for a in [0.0, 0.5, 1.0] {
            let (nt, nx, _, _) = SubexModel::new(a, 1.0).dims().unwrap();
            assert!(nt * nx <= SUBEX_CAP);
        }
        let m = SubexModel { grid: Some((256, 256)), ..SubexModel::new(1.0, 1.0) };
        assert!(matches!(m.dims(), Err(Error::Size(_))));
    }

    #[test]
    fn small_matrix_verdicts() {
        let rows = subellipticity_matrix(&[0.0, 1.0], &[1.0, 2.0], &logspace(1e-3, 1e-1, 6), 64 * 64).unwrap();
        for r in &rows {
            assert!(r.matches(), "α={} β={} γ={}", r.alpha, r.beta, r.report.gamma_hat);
        }
    }
}
