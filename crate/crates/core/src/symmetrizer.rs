//! Symmetrizer search for `Q = MP` with one constant `M` per patch.
//!
//! Unknowns are `(Re M, Im M, C)`. The two families of semidefinite
//! constraints are solved by Dykstra projections between the affine image
//! and the PSD cones, followed by a subgradient polish of the `Re` margin.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, I};
use crate::symbol::io::cmat_serde;
use crate::symbol::{MatrixSymbol, PhasePoint, TangentDirection};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoMode {
    /// No shift.
    Off,
    /// Smallest `ρ ∈ {1, 2, 4, ...}` with `Im Q ⪰ c'·Q*Q`, `c' ≥ 1e-8`.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymmetrizerParams {
    pub c_target: f64,
    pub c_max: f64,
    pub max_iters: usize,
    pub rho: RhoMode,
}

impl Default for SymmetrizerParams {
    fn default() -> Self {
        Self { c_target: 1e-2, c_max: 1e3, max_iters: 4000, rho: RhoMode::Auto }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymmetrizerResult {
    #[serde(with = "cmat_serde")]
    pub m: CMat,
    pub feasible: bool,
    /// Per sample: `(λ_min(Re(M ∂_V P) + C·P*P), C − C_needed)`.
    pub margins: Vec<(f64, f64)>,
    pub c_used: f64,
    /// `min_w σ_min(M + iρP*(w))`.
    pub sigma_min_m: f64,
    pub rho_shift: f64,
    /// Largest `c'` with `Im Q ⪰ c'·Q*Q` on the samples after the shift.
    pub immp_margin: f64,
    pub iterations: usize,
}

impl SymmetrizerResult {
    pub fn min_margins(&self) -> (f64, f64) {
        self.margins
            .iter()
            .fold((f64::INFINITY, f64::INFINITY), |(a, b), &(x, y)| (a.min(x), b.min(y)))
    }

    /// `Q = (M + iρP*)P`.
    pub fn q_symbol(&self, p: &MatrixSymbol) -> MatrixSymbol {
        shifted_q(p, &self.m, self.rho_shift)
    }
}

pub fn shifted_q(p: &MatrixSymbol, m: &CMat, rho: f64) -> MatrixSymbol {
    let mp = MatrixSymbol::product(vec![MatrixSymbol::constant(p.phase_dim, m.clone()), p.clone()]);
    if rho == 0.0 {
        return mp;
    }
    let pp = MatrixSymbol::product(vec![p.clone().adjoint(), p.clone()]).scaled(I * rho);
    MatrixSymbol::sum(vec![mp, pp])
}

/// Frobenius-isometric real coordinates of a Hermitian matrix.
fn hvec(h: &CMat, out: &mut [f64]) {
    let n = h.nrows();
    let s2 = std::f64::consts::SQRT_2;
    let mut k = 0;
    for i in 0..n {
        out[k] = h[(i, i)].re;
        k += 1;
    }
    for i in 0..n {
        for j in i + 1..n {
            out[k] = s2 * h[(i, j)].re;
            out[k + 1] = s2 * h[(i, j)].im;
            k += 2;
        }
    }
}

fn hunvec(v: &[f64], n: usize) -> CMat {
    let s2 = std::f64::consts::SQRT_2;
    let mut h = CMat::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        h[(i, i)] = linalg::re(v[k]);
        k += 1;
    }
    for i in 0..n {
        for j in i + 1..n {
            let z = C64::new(v[k] / s2, v[k + 1] / s2);
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
            k += 2;
        }
    }
    h
}

fn basis(n: usize, k: usize) -> CMat {
    let nn = n * n;
    let mut b = CMat::zeros(n, n);
    let (kk, v) = if k < nn { (k, linalg::re(1.0)) } else { (k - nn, I) };
    b[(kk / n, kk % n)] = v;
    b
}

fn m_of(x: &[f64], n: usize) -> CMat {
    let nn = n * n;
    CMat::from_fn(n, n, |a, b| C64::new(x[a * n + b], x[nn + a * n + b]))
}

struct PatchData {
    n: usize,
    p: Vec<CMat>,
    d: Vec<CMat>,
    scale: f64,
}

fn patch_data(p: &MatrixSymbol, samples: &[PhasePoint], v: &TangentDirection) -> Result<PatchData> {
    if samples.is_empty() {
        return Err(Error::Input("no samples".into()));
    }
    let vals: Vec<(CMat, CMat)> = samples
        .par_iter()
        .map(|w| Ok((p.eval(w)?, p.directional_derivative(w, v)?)))
        .collect::<Result<_>>()?;
    let scale = vals
        .iter()
        .map(|(a, b)| linalg::op_norm(a).max(linalg::op_norm(b)))
        .fold(0.0, f64::max);
    let (pv, dv) = vals.into_iter().unzip();
    Ok(PatchData { n: p.dim, p: pv, d: dv, scale })
}

/// Constraint rows: block `2j` is `Im(M P̂_j) + C P̂_j*P̂_j`, block `2j+1` is
/// `Re(M D̂_j) + C P̂_j*P̂_j`; `P̂ = P/scale`.
fn constraint_matrix(pd: &PatchData) -> DMatrix<f64> {
    let n = pd.n;
    let nn = n * n;
    let nx = 2 * nn + 1;
    let ns = pd.p.len();
    let mut g = DMatrix::zeros(2 * ns * nn, nx);
    let mut buf = vec![0.0; nn];
    for j in 0..ns {
        let ph = &pd.p[j] / linalg::re(pd.scale);
        let dh = &pd.d[j] / linalg::re(pd.scale);
        let pp = ph.adjoint() * &ph;
        for k in 0..nx {
            let (h1, h2) = if k == nx - 1 {
                (pp.clone(), pp.clone())
            } else {
                let b = basis(n, k);
                (linalg::hermitian_split(&(&b * &ph)).1, linalg::hermitian_split(&(&b * &dh)).0)
            };
            hvec(&h1, &mut buf);
            for (r, &val) in buf.iter().enumerate() {
                g[(2 * j * nn + r, k)] = val;
            }
            hvec(&h2, &mut buf);
            for (r, &val) in buf.iter().enumerate() {
                g[((2 * j + 1) * nn + r, k)] = val;
            }
        }
    }
    g
}

fn block_min_eigs(g: &DMatrix<f64>, x: &DVector<f64>, n: usize) -> (f64, f64, usize) {
    let nn = n * n;
    let y = g * x;
    let nb = y.len() / nn;
    let mut m1 = f64::INFINITY;
    let mut m2 = f64::INFINITY;
    let mut arg = 1;
    for b in 0..nb {
        let l = linalg::lambda_min(&hunvec(&y.as_slice()[b * nn..(b + 1) * nn], n));
        if b % 2 == 0 {
            m1 = m1.min(l);
        } else if l < m2 {
            m2 = l;
            arg = b;
        }
    }
    (m1, m2, arg)
}

/// Smallest `C ≥ 0` with `λ_min(Im(MP) + C·P*P) ≥ −tol`, capped at `cap`.
fn c_needed(mp_im: &CMat, pp: &CMat, tol: f64, cap: f64) -> f64 {
    let ok = |c: f64| linalg::lambda_min(&(mp_im + pp * linalg::re(c))) >= -tol;
    if ok(0.0) {
        return 0.0;
    }
    if !ok(cap) {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (0.0f64, cap);
    for _ in 0..200 {
        let mid = if lo == 0.0 { hi * 1e-4 } else { (lo * hi).sqrt() };
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-9 * hi {
            break;
        }
    }
    hi
}

fn evaluate(pd: &PatchData, m: &CMat, c_base: f64, slack: f64) -> (f64, Vec<(f64, f64)>) {
    let tol = 1e-9 * linalg::op_norm(m).max(1.0) * pd.scale.max(1.0);
    let need: Vec<f64> = pd
        .p
        .par_iter()
        .map(|p| c_needed(&linalg::hermitian_split(&(m * p)).1, &(p.adjoint() * p), tol, 1e12))
        .collect();
    let c_used = need.iter().copied().fold(c_base, f64::max) + slack;
    let margins = pd
        .p
        .par_iter()
        .zip(&pd.d)
        .zip(&need)
        .map(|((p, d), &nd)| {
            let h1 = linalg::hermitian_split(&(m * d)).0 + p.adjoint() * p * linalg::re(c_used);
            let m2 = if nd.is_finite() { c_used - nd } else { f64::NEG_INFINITY };
            (linalg::lambda_min(&h1), m2)
        })
        .collect();
    (c_used, margins)
}

/// Largest `c'` with `λ_min(Im Q − c'·Q*Q) ≥ −tol` at one point.
fn immp_point(q: &CMat) -> f64 {
    let qn = linalg::op_norm(q);
    if qn == 0.0 {
        return f64::INFINITY;
    }
    let tol = 1e-12 * qn.max(1.0);
    let im = linalg::hermitian_split(q).1;
    let qq = q.adjoint() * q;
    let ok = |c: f64| linalg::lambda_min(&(&im - &qq * linalg::re(c))) >= -tol;
    if !ok(0.0) {
        return -linalg::lambda_min(&im).abs();
    }
    let cap = 1e12;
    if ok(cap) {
        return cap;
    }
    let (mut lo, mut hi) = (0.0f64, cap);
    for _ in 0..200 {
        let mid = if lo == 0.0 { 1e-12 } else { (lo * hi).sqrt() };
        if lo == 0.0 && !ok(mid) {
            return 0.0;
        }
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-6 * hi {
            break;
        }
    }
    lo
}

fn shift_stats(pd: &PatchData, m: &CMat, rho: f64) -> (f64, f64) {
    pd.p
        .par_iter()
        .map(|p| {
            let ms = m + p.adjoint() * (I * rho);
            (immp_point(&(&ms * p)), linalg::sigma_min(&ms))
        })
        .reduce(|| (f64::INFINITY, f64::INFINITY), |a, b| (a.0.min(b.0), a.1.min(b.1)))
}

pub const IMMP_MIN: f64 = 1e-8;

fn apply_rho(pd: &PatchData, m: &CMat, mode: RhoMode) -> (f64, f64, f64) {
    match mode {
        RhoMode::Off => {
            let (c, s) = shift_stats(pd, m, 0.0);
            (0.0, c, s)
        }
        RhoMode::Fixed(r) => {
            let (c, s) = shift_stats(pd, m, r);
            (r, c, s)
        }
        RhoMode::Auto => {
            let mut last = (1.0, f64::NEG_INFINITY, 0.0);
            for e in 0..=30 {
                let r = f64::powi(2.0, e);
                let (c, s) = shift_stats(pd, m, r);
                last = (r, c, s);
                if c >= IMMP_MIN && s > 1e-12 {
                    break;
                }
            }
            last
        }
    }
}

/// Margins, `C` and the shift for a given symmetrizer.
pub fn assess_symmetrizer(
    p: &MatrixSymbol,
    samples: &[PhasePoint],
    v: &TangentDirection,
    m: &CMat,
    params: &SymmetrizerParams,
) -> Result<SymmetrizerResult> {
    let pd = patch_data(p, samples, v)?;
    if m.nrows() != pd.n || m.ncols() != pd.n {
        return Err(Error::Dimension("symmetrizer shape differs from symbol".into()));
    }
    let scale = pd.scale.max(1e-300);
    Ok(finish(&pd, m.clone(), 0.0, params.c_target / scale, params, 0))
}

fn finish(pd: &PatchData, m: CMat, c_base: f64, slack: f64, params: &SymmetrizerParams, iterations: usize) -> SymmetrizerResult {
    let (c_used, margins) = evaluate(pd, &m, c_base, slack);
    let feasible = margins.iter().all(|&(a, b)| a > 0.0 && b > 0.0);
    let (rho_shift, immp_margin, sigma_min_m) = apply_rho(pd, &m, params.rho);
    SymmetrizerResult { m, feasible, margins, c_used, sigma_min_m, rho_shift, immp_margin, iterations }
}

pub fn find_symmetrizer(
    p: &MatrixSymbol,
    samples: &[PhasePoint],
    v: &TangentDirection,
    params: &SymmetrizerParams,
) -> Result<SymmetrizerResult> {
    if params.c_target <= 0.0 {
        return Err(Error::InvalidParams("c_target must be positive".into()));
    }
    let pd = patch_data(p, samples, v)?;
    let n = pd.n;
    let nn = n * n;
    let nx = 2 * nn + 1;
    if pd.scale == 0.0 {
        return Ok(SymmetrizerResult {
            m: CMat::zeros(n, n),
            feasible: false,
            margins: vec![(0.0, 0.0); samples.len()],
            c_used: 0.0,
            sigma_min_m: 0.0,
            rho_shift: 0.0,
            immp_margin: 0.0,
            iterations: 0,
        });
    }
    let g = constraint_matrix(&pd);
    let rows = g.nrows();
    let nb = rows / nn;
    // offsets: −2c·I on the Re blocks
    let c_solve = 2.0 * params.c_target;
    let mut off = DVector::zeros(rows);
    let mut idm = vec![0.0; nn];
    hvec(&linalg::eye(n), &mut idm);
    for b in (1..nb).step_by(2) {
        for r in 0..nn {
            off[b * nn + r] = -c_solve * idm[r];
        }
    }
    let normal = DMatrix::<f64>::identity(nx, nx) + g.transpose() * &g;
    let chol = normal.cholesky().ok_or_else(|| Error::Singular("normal equations".into()))?;
    let c_max_hat = params.c_max * pd.scale * pd.scale;

    let mut zx = DVector::<f64>::zeros(nx);
    let mut zs = DVector::<f64>::zeros(rows);
    let mut qx = DVector::<f64>::zeros(nx);
    let mut qs = DVector::<f64>::zeros(rows);
    let mut x = zx.clone();
    let mut iters = 0;
    let mut found = false;
    for it in 0..params.max_iters {
        iters = it + 1;
        // affine: s = G x + off
        let rhs = &zx + g.transpose() * (&zs - &off);
        x = chol.solve(&rhs);
        let s = &g * &x + &off;
        if it % 5 == 0 {
            let (m1, m2, _) = block_min_eigs(&g, &x, n);
            if m1 >= -1e-10 && m2 - c_solve >= -params.c_target {
                found = true;
                break;
            }
        }
        // cone
        let ux = &x + &qx;
        let us = &s + &qs;
        let mut nxv = ux.clone();
        nxv[nx - 1] = nxv[nx - 1].clamp(0.0, c_max_hat);
        let mut nsv = us.clone();
        nsv.as_mut_slice().par_chunks_mut(nn).for_each(|blk| {
            let (pr, _) = linalg::psd_project(&hunvec(blk, n));
            hvec(&pr, blk);
        });
        qx = &ux - &nxv;
        qs = &us - &nsv;
        zx = nxv;
        zs = nsv;
    }
    x[nx - 1] = x[nx - 1].clamp(0.0, c_max_hat);
    let x = polish(&g, x, n, c_max_hat, 200);
    let m = m_of(x.as_slice(), n);
    let c_base = x[nx - 1] / pd.scale;
    let mut r = finish(&pd, m, c_base, params.c_target / pd.scale, params, iters);
    r.feasible &= found || r.min_margins().0 > 0.0;
    Ok(r)
}

/// Projected subgradient ascent of `min_j λ_min(Re block j)` on the ball
/// `‖M‖ ≤ ‖M_0‖`, rejecting steps that break the `Im` blocks.
fn polish(g: &DMatrix<f64>, x0: DVector<f64>, n: usize, c_max: f64, iters: usize) -> DVector<f64> {
    let nn = n * n;
    let nx = x0.len();
    let radius = x0.rows(0, nx - 1).norm();
    if radius == 0.0 {
        return x0;
    }
    let (i0, f0, _) = block_min_eigs(g, &x0, n);
    let im_floor = i0.min(0.0) - 1e-12;
    let mut best = (f0, x0.clone());
    let mut x = x0;
    let mut buf = vec![0.0; nn];
    for k in 0..iters {
        let (_, _, arg) = block_min_eigs(g, &x, n);
        let y = g * &x;
        let (_, vecs) = linalg::eigh(&hunvec(&y.as_slice()[arg * nn..(arg + 1) * nn], n));
        let u = vecs.column(0).into_owned();
        hvec(&(&u * u.adjoint()), &mut buf);
        let grad = g.rows(arg * nn, nn).transpose() * DVector::from_column_slice(&buf);
        let gn = grad.norm();
        if gn == 0.0 {
            break;
        }
        let step = 0.1 * radius / ((k + 1) as f64).sqrt();
        let mut cand = &x + grad * (step / gn);
        let mn = cand.rows(0, nx - 1).norm();
        if mn > radius {
            let s = radius / mn;
            for i in 0..nx - 1 {
                cand[i] *= s;
            }
        }
        cand[nx - 1] = cand[nx - 1].clamp(0.0, c_max);
        let (ci, cf, _) = block_min_eigs(g, &cand, n);
        if ci < im_floor {
            continue;
        }
        x = cand;
        if cf > best.0 {
            best = (cf, x.clone());
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quasisym::{is_quasi_symmetric, sample_patch, CChoice};
    use crate::symbol::models::model_library;
    use serde_json::Value;

    #[test]
    fn hvec_roundtrip() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
        let h = linalg::random_hermitian(&mut rng, 3);
        let mut v = vec![0.0; 9];
        hvec(&h, &mut v);
        assert!(linalg::frob(&(hunvec(&v, 3) - &h)) < 1e-14);
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - linalg::frob(&h)).abs() < 1e-12);
    }

    #[test]
    fn w2iw3_symmetrizer() {
        let p = model_library("w2iw3", &Value::Null).unwrap();
        let s = sample_patch(&PhasePoint::origin(4), 0.2, 120, &[0, 1, 2], 7);
        let v = TangentDirection::axis(4, 0);
        let r = find_symmetrizer(&p, &s, &v, &SymmetrizerParams::default()).unwrap();
        assert!(r.feasible);
        let (m1, m2) = r.min_margins();
        assert!(m1 >= 1e-3 && m2 >= 1e-3, "{m1} {m2}");
        assert!(r.immp_margin >= IMMP_MIN && r.sigma_min_m > 0.0);
        let q = r.q_symbol(&p);
        assert!(is_quasi_symmetric(&q, &s, &v, CChoice::Auto).unwrap().yes());
    }

    #[test]
    fn sigma_x_symmetrizer_is_feasible() {
        let p = model_library("w2iw3", &Value::Null).unwrap();
        let s = sample_patch(&PhasePoint::origin(4), 0.2, 60, &[0, 1, 2], 8);
        let m = linalg::rmat(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let r = assess_symmetrizer(&p, &s, &TangentDirection::axis(4, 0), &m, &SymmetrizerParams::default()).unwrap();
        assert!(r.feasible);
        assert!((r.min_margins().0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn elliptic_identity() {
        let p = model_library("identity", &serde_json::json!({"n": 2, "phase_dim": 2})).unwrap();
        let s = sample_patch(&PhasePoint::origin(2), 0.2, 20, &[0, 1], 1);
        for k in 0..2 {
            let r = find_symmetrizer(&p, &s, &TangentDirection::axis(2, k), &SymmetrizerParams::default()).unwrap();
            assert!(r.feasible);
            assert!(r.sigma_min_m > 0.0);
        }
    }

    #[test]
    fn sex_model_with_identity() {
        let p = model_library("sex", &Value::Null).unwrap();
        let s = sample_patch(&PhasePoint::origin(4), 0.3, 60, &[0, 1, 2, 3], 2);
        let v = TangentDirection::axis(4, 2);
        let r = assess_symmetrizer(&p, &s, &v, &linalg::eye(2), &SymmetrizerParams::default()).unwrap();
        assert!(r.feasible);
        let r = find_symmetrizer(&p, &s, &v, &SymmetrizerParams::default()).unwrap();
        assert!(r.feasible);
    }

    #[test]
    fn zero_symbol_not_found() {
        let p = MatrixSymbol::constant(2, CMat::zeros(2, 2));
        let s = sample_patch(&PhasePoint::origin(2), 0.2, 10, &[0, 1], 1);
        let r = find_symmetrizer(&p, &s, &TangentDirection::axis(2, 0), &SymmetrizerParams::default()).unwrap();
        assert!(!r.feasible);
    }
}
