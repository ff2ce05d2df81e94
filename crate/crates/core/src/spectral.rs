//! Riesz projections by trapezoid quadrature on `|z| = ε`, the
//! approximation property and the block normal form.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::symbol::io::cmat_serde;
use crate::symbol::{HypersurfaceChart, MatrixSymbol, PhasePoint};

/// Eigenvalues closer than this fraction of `ε` to the contour are rejected.
pub const CONTOUR_MARGIN: f64 = 0.1;
pub const ACCEPT_DEFECT: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct SpectralProjection {
    #[serde(with = "cmat_serde")]
    pub pi: CMat,
    pub epsilon: f64,
    pub nodes: usize,
    pub rank: usize,
    pub idempotency_defect: f64,
    pub commutation_defect: f64,
}

fn sorted_moduli(q: &CMat) -> Vec<f64> {
    let mut m: Vec<f64> = linalg::eigenvalues(q).iter().map(|z| z.norm()).collect();
    m.sort_by(|a, b| a.total_cmp(b));
    m
}

/// Radius separating the `k` smallest eigenvalue moduli from the rest.
pub fn cluster_radius(moduli: &[f64], k: usize) -> f64 {
    let n = moduli.len();
    if k == 0 {
        return 0.5 * moduli[0];
    }
    if k >= n {
        return (4.0 * moduli[n - 1]).max(1e-3);
    }
    let out = moduli[k];
    (moduli[k - 1].max(1e-3 * out) * out).sqrt()
}

/// Size of the cluster at the largest multiplicative gap of the moduli.
pub fn default_cluster(moduli: &[f64]) -> usize {
    let n = moduli.len();
    let tiny = 1e-14 * moduli[n - 1].max(1.0);
    (1..n)
        .max_by(|&a, &b| {
            let ra = (moduli[a] + tiny) / (moduli[a - 1] + tiny);
            let rb = (moduli[b] + tiny) / (moduli[b - 1] + tiny);
            ra.total_cmp(&rb).then(b.cmp(&a))
        })
        .unwrap_or(n)
}

/// Default `ε`: geometric mean across the largest gap of the eigenvalue
/// moduli.
pub fn default_epsilon(q: &CMat) -> f64 {
    let m = sorted_moduli(q);
    cluster_radius(&m, default_cluster(&m))
}

fn check_contour(q: &CMat, eps: f64) -> Result<usize> {
    let mut inside = 0;
    for z in linalg::eigenvalues(q) {
        let d = (z.norm() - eps).abs();
        if d < CONTOUR_MARGIN * eps {
            return Err(Error::Contour { epsilon: eps, distance: d });
        }
        if z.norm() < eps {
            inside += 1;
        }
    }
    Ok(inside)
}

fn trapezoid(q: &CMat, eps: f64, nodes: usize) -> Result<CMat> {
    let n = q.nrows();
    let id = linalg::eye(n);
    let parts: Vec<CMat> = (0..nodes)
        .into_par_iter()
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / nodes as f64;
            let z = C64::from_polar(eps, th);
            let r = (&id * z - q).lu().try_inverse().ok_or_else(|| Error::Singular("resolvent".into()))?;
            Ok(r * z)
        })
        .collect::<Result<_>>()?;
    let mut acc = CMat::zeros(n, n);
    for p in parts {
        acc += p;
    }
    Ok(acc / linalg::re(nodes as f64))
}

pub fn spectral_projection(q: &CMat, epsilon: Option<f64>, nodes: Option<usize>) -> Result<SpectralProjection> {
    if q.nrows() != q.ncols() || q.nrows() == 0 {
        return Err(Error::Dimension("square nonempty matrix required".into()));
    }
    let eps = epsilon.unwrap_or_else(|| default_epsilon(q));
    if !(eps > 0.0) {
        return Err(Error::InvalidParams("epsilon must be positive".into()));
    }
    let rank = check_contour(q, eps)?;
    let (pi, used) = match nodes {
        Some(k) if k < 16 => return Err(Error::InvalidParams("at least 16 nodes required".into())),
        Some(k) => (trapezoid(q, eps, k)?, k),
        None => {
            let mut k = 32;
            let mut prev = trapezoid(q, eps, k)?;
            loop {
                let next = trapezoid(q, eps, 2 * k)?;
                k *= 2;
                let diff = linalg::max_abs(&(&next - &prev));
                prev = next;
                if diff <= 1e-14 * linalg::max_abs(&prev).max(1.0) || k >= 8192 {
                    break;
                }
            }
            (prev, k)
        }
    };
    let idempotency_defect = linalg::op_norm(&(&pi * &pi - &pi));
    let commutation_defect = linalg::op_norm(&(q * &pi - &pi * q));
    Ok(SpectralProjection { pi, epsilon: eps, nodes: used, rank, idempotency_defect, commutation_defect })
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproxPropertyCheck {
    pub verdict: bool,
    /// No eigenvalue of `Q(w0)` near zero: the condition is empty.
    pub vacuous: bool,
    pub max_defect: f64,
    pub tangential_derivative_defect: f64,
    pub rank: usize,
    pub kernel_dim: usize,
    pub epsilon: f64,
}

#[derive(Debug, Clone)]
pub struct ApproxParams {
    pub epsilon: Option<f64>,
    pub tol: f64,
    pub fd_step: f64,
    pub jump_max: f64,
}

impl Default for ApproxParams {
    fn default() -> Self {
        Self { epsilon: None, tol: 1e-6, fd_step: 1e-4, jump_max: 0.1 }
    }
}

/// Projection onto the `k` smallest eigenvalues, keeping `eps` when it
/// separates them and re-centering otherwise.
fn cluster_projection(q: &CMat, k: usize, eps: f64) -> Result<SpectralProjection> {
    if let Ok(p) = spectral_projection(q, Some(eps), None) {
        if p.rank == k {
            return Ok(p);
        }
    }
    let m = sorted_moduli(q);
    let e = cluster_radius(&m, k);
    let p = spectral_projection(q, Some(e), None)?;
    if p.rank != k {
        return Err(Error::BundleDiscontinuity(format!("rank {} where {k} expected", p.rank)));
    }
    Ok(p)
}

fn re_compression(q: &CMat, pi: &CMat) -> CMat {
    pi.adjoint() * linalg::hermitian_split(q).0 * pi
}

/// Samples of `Σ = {τ = τ(w0)}` around `w0` in the tangential coordinates.
pub fn sigma_patch(chart: &HypersurfaceChart, w0: &PhasePoint, radius: f64, count: usize, seed: u64) -> Vec<PhasePoint> {
    crate::quasisym::sample_patch(w0, radius, count, &chart.tangential_indices(), seed)
}

pub fn approximation_property_check(
    q: &MatrixSymbol,
    chart: &HypersurfaceChart,
    w0: &PhasePoint,
    sigma_samples: &[PhasePoint],
    params: &ApproxParams,
) -> Result<ApproxPropertyCheck> {
    let tau = chart.tau_index;
    for s in sigma_samples {
        if (s.coords[tau] - w0.coords[tau]).abs() > 1e-12 {
            return Err(Error::Input("sample off the hypersurface".into()));
        }
    }
    let q0 = q.eval(w0)?;
    let scale = sigma_samples
        .iter()
        .map(|w| q.eval(w).map(|m| linalg::op_norm(&m)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(linalg::op_norm(&q0).max(1.0), f64::max);
    let m0 = sorted_moduli(&q0);
    let ztol = 1e-6 * linalg::op_norm(&q0).max(1.0);
    let k = m0.iter().filter(|&&x| x <= ztol).count();
    let kernel_dim = linalg::kernel_basis(&q0, 1e-9).ncols();
    if k == 0 {
        return Ok(ApproxPropertyCheck {
            verdict: true,
            vacuous: true,
            max_defect: 0.0,
            tangential_derivative_defect: 0.0,
            rank: 0,
            kernel_dim,
            epsilon: 0.0,
        });
    }
    let eps0 = params.epsilon.unwrap_or_else(|| cluster_radius(&m0, k));
    let p0 = cluster_projection(&q0, k, eps0)?;

    // nearest-neighbour order from w0 for the jump monitor
    let dist = |a: &PhasePoint, b: &PhasePoint| {
        a.coords.iter().zip(&b.coords).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    };
    let projs: Vec<(PhasePoint, CMat, CMat)> = sigma_samples
        .par_iter()
        .map(|w| {
            let qw = q.eval(w)?;
            let p = cluster_projection(&qw, k, eps0)?;
            Ok((w.clone(), qw, p.pi))
        })
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..projs.len()).collect();
    order.sort_by(|&a, &b| dist(&projs[a].0, w0).total_cmp(&dist(&projs[b].0, w0)));
    let mut seen: Vec<(PhasePoint, CMat)> = vec![(w0.clone(), p0.pi.clone())];
    let mut max_defect = linalg::op_norm(&re_compression(&q0, &p0.pi)) / scale;
    for &i in &order {
        let (w, qw, pi) = &projs[i];
        let near = seen
            .iter()
            .min_by(|a, b| dist(&a.0, w).total_cmp(&dist(&b.0, w)))
            .expect("nonempty");
        let jump = linalg::op_norm(&(pi - &near.1));
        if jump > params.jump_max {
            return Err(Error::BundleDiscontinuity(format!("projection jump {jump:.3e} at {:?}", w.coords)));
        }
        max_defect = max_defect.max(linalg::op_norm(&re_compression(qw, pi)) / scale);
        seen.push((w.clone(), pi.clone()));
    }

    let h = params.fd_step;
    let mut tang: f64 = 0.0;
    for idx in chart.tangential_indices() {
        let g = |s: f64| -> Result<CMat> {
            let w = w0.shifted(idx, s);
            let qw = q.eval(&w)?;
            let p = cluster_projection(&qw, k, eps0)?;
            Ok(re_compression(&qw, &p.pi))
        };
        let d = (g(h)? - g(-h)?) / linalg::re(2.0 * h);
        tang = tang.max(linalg::op_norm(&d) / scale);
    }
    Ok(ApproxPropertyCheck {
        verdict: max_defect <= params.tol && tang <= params.tol,
        vacuous: false,
        max_defect,
        tangential_derivative_defect: tang,
        rank: p0.rank,
        kernel_dim,
        epsilon: p0.epsilon,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockForm {
    #[serde(with = "cmat_serde")]
    pub q11: CMat,
    #[serde(with = "cmat_serde")]
    pub q22: CMat,
    #[serde(with = "cmat_serde")]
    pub left_transform: CMat,
    #[serde(with = "cmat_serde")]
    pub basis_transform: CMat,
    pub residual_q12: f64,
}

/// Orthonormal basis of `Ran Π` completed to a unitary, then the `(1,2)`
/// block removed by `[[I, −Q12 Q22⁻¹], [0, I]]` from the left.
pub fn block_normal_form(q: &CMat, pi: &SpectralProjection) -> Result<BlockForm> {
    let n = q.nrows();
    let u1 = linalg::range_basis(&pi.pi, 1e-8);
    let k = u1.ncols();
    let u2 = linalg::kernel_basis(&u1.adjoint(), 1e-8);
    if u2.ncols() + k != n {
        return Err(Error::Dimension("could not complete the basis".into()));
    }
    let mut u = CMat::zeros(n, n);
    u.view_mut((0, 0), (n, k)).copy_from(&u1);
    u.view_mut((0, k), (n, n - k)).copy_from(&u2);
    let b = u.adjoint() * q * &u;
    let q11 = b.view((0, 0), (k, k)).into_owned();
    let q12 = b.view((0, k), (k, n - k)).into_owned();
    let q22 = b.view((k, k), (n - k, n - k)).into_owned();
    let mut left = linalg::eye(n);
    if n > k {
        let s = linalg::sigma_min(&q22);
        if s <= 1e-12 * linalg::op_norm(q).max(1.0) {
            return Err(Error::Singular(format!("Q22 has σ_min = {s:.3e}")));
        }
        let inv = q22.clone().lu().try_inverse().ok_or_else(|| Error::Singular("Q22".into()))?;
        left.view_mut((0, k), (k, n - k)).copy_from(&(-(&q12 * inv)));
    }
    let r = &left * &b;
    let mut d = CMat::zeros(n, n);
    d.view_mut((0, 0), (k, k)).copy_from(&q11);
    d.view_mut((k, k), (n - k, n - k)).copy_from(&q22);
    let residual_q12 = linalg::op_norm(&(r - d));
    Ok(BlockForm { q11, q22, left_transform: left, basis_transform: u, residual_q12 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, rmat};
    use crate::symbol::models::model_library;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use serde_json::json;

    #[test]
    fn diagonal_and_nilpotent() {
        let p = spectral_projection(&rmat(2, 2, &[0.0, 0.0, 0.0, 1.0]), Some(0.5), Some(64)).unwrap();
        assert!(linalg::max_abs(&(&p.pi - rmat(2, 2, &[1.0, 0.0, 0.0, 0.0]))) < 1e-14);
        assert_eq!(p.rank, 1);
        let p = spectral_projection(&rmat(2, 2, &[0.0, 1.0, 0.0, 0.0]), Some(0.5), None).unwrap();
        assert!(linalg::max_abs(&(&p.pi - linalg::eye(2))) < 1e-14);
    }

    #[test]
    fn contour_too_close() {
        let r = spectral_projection(&rmat(2, 2, &[0.5, 0.0, 0.0, 2.0]), Some(0.52), None);
        assert!(matches!(r, Err(Error::Contour { .. })));
    }

    #[test]
    fn random_gapped_matches_eigen_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = linalg::random_conditioned(&mut rng, 3, 5.0);
        let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.01, 0.0), c(2.0, 0.0), c(3.0, 0.0)]));
        let sinv = linalg::inverse(&s).unwrap();
        let q = &s * &d * &sinv;
        let p = spectral_projection(&q, None, None).unwrap();
        let mut e = CMat::zeros(3, 3);
        e[(0, 0)] = c(1.0, 0.0);
        let oracle = &s * e * &sinv;
        assert!(linalg::op_norm(&(&p.pi - oracle)) < 1e-8);
        assert!(p.idempotency_defect < 1e-8 && p.commutation_defect < 1e-8);
        let p16 = spectral_projection(&q, Some(p.epsilon), Some(16)).unwrap();
        let p32 = spectral_projection(&q, Some(p.epsilon), Some(32)).unwrap();
        assert_eq!(p16.rank, p32.rank);
    }

    #[test]
    fn block_forms() {
        let q = rmat(2, 2, &[0.0, 1.0, 0.0, 2.0]);
        let p = spectral_projection(&q, Some(0.5), None).unwrap();
        let b = block_normal_form(&q, &p).unwrap();
        assert!(b.q11[(0, 0)].norm() < 1e-12);
        assert!((b.q22[(0, 0)].norm() - 2.0).abs() < 1e-12);
        assert!(b.residual_q12 < 1e-12);
        let d = rmat(2, 2, &[0.0, 0.0, 0.0, 3.0]);
        let b = block_normal_form(&d, &spectral_projection(&d, Some(0.5), None).unwrap()).unwrap();
        assert!(linalg::max_abs(&(&b.left_transform - linalg::eye(2))) < 1e-14);
        assert!(b.residual_q12 < 1e-14);
    }

    #[test]
    fn random_block_conserves_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = linalg::random_conditioned(&mut rng, 4, 5.0);
        let ev = [c(0.001, 0.0), c(-0.002, 0.001), c(2.0, 1.0), c(3.0, 0.0)];
        let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(ev.to_vec()));
        let q = &s * d * linalg::inverse(&s).unwrap();
        let p = spectral_projection(&q, None, None).unwrap();
        assert_eq!(p.rank, 2);
        let b = block_normal_form(&q, &p).unwrap();
        assert!(b.residual_q12 < 1e-10);
        let mut got: Vec<C64> = linalg::eigenvalues(&b.q11);
        got.extend(linalg::eigenvalues(&b.q22));
        for e in ev {
            assert!(got.iter().any(|g| (g - e).norm() < 1e-8));
        }
    }

    #[test]
    fn subex_approximation_property() {
        let chart = HypersurfaceChart::standard(4);
        let w0 = PhasePoint::new(vec![0.0; 4]).unwrap();
        let samples = sigma_patch(&chart, &w0, 0.1, 40, 3);
        for (alpha, expect) in [(0.0, true), (1.0, false), (0.5, false)] {
            let q = model_library("subex", &json!({"alpha": alpha, "beta": 1.0})).unwrap();
            let r = approximation_property_check(&q, &chart, &w0, &samples, &ApproxParams::default()).unwrap();
            assert_eq!(r.verdict, expect, "alpha {alpha}: {r:?}");
            assert!(!r.vacuous);
        }
    }

    #[test]
    fn simplex_approximation_property() {
        let chart = HypersurfaceChart::standard(4);
        let w0 = PhasePoint::new(vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        let samples = sigma_patch(&chart, &w0, 0.1, 40, 5);
        let q = model_library("simplex", &json!({"f": "ex2"})).unwrap();
        let r = approximation_property_check(&q, &chart, &w0, &samples, &ApproxParams::default()).unwrap();
        assert!(r.verdict && !r.vacuous);
        assert_eq!(r.rank, 2);
        assert_eq!(r.rank, r.kernel_dim);
    }

    #[test]
    fn invertible_point_is_vacuous() {
        let chart = HypersurfaceChart::standard(2);
        let q = MatrixSymbol::constant(2, linalg::eye(2));
        let w0 = PhasePoint::origin(2);
        let r = approximation_property_check(&q, &chart, &w0, &[], &ApproxParams::default()).unwrap();
        assert!(r.verdict && r.vacuous);
    }
}
