//! Dense complex linear algebra shared by every module.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Default relative rank cutoff.
pub const RANK_TOL: f64 = 1e-9;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn cmat(rows: usize, cols: usize, data: &[C64]) -> CMat {
    CMat::from_row_slice(rows, cols, data)
}

/// Real row-major entries.
pub fn rmat(rows: usize, cols: usize, data: &[f64]) -> CMat {
    CMat::from_row_iterator(rows, cols, data.iter().map(|&x| re(x)))
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(n: usize, m: usize) -> CMat {
    CMat::zeros(n, m)
}

/// `(Re A, Im A)` with `A = Re A + i Im A`, both Hermitian.
pub fn hermitian_split(a: &CMat) -> (CMat, CMat) {
    let adj = a.adjoint();
    let r = (a + &adj) * re(0.5);
    let i = (a - &adj) * c(0.0, -0.5);
    (r, i)
}

pub fn herm_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * re(0.5)
}

pub fn frob(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Ascending eigenvalues and matching eigenvectors of the Hermitian part of `a`.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    if n == 0 {
        return (vec![], zeros(0, 0));
    }
    let eig = herm_part(a).symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = zeros(n, n);
    for (k, &i) in idx.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Smallest eigenvalue of the Hermitian part of `a`.
pub fn lambda_min(a: &CMat) -> f64 {
    match a.nrows() {
        0 => f64::INFINITY,
        1 => a[(0, 0)].re,
        2 => {
            let p = a[(0, 0)].re;
            let q = a[(1, 1)].re;
            let b = (a[(0, 1)] + a[(1, 0)].conj()) * 0.5;
            0.5 * (p + q) - (0.25 * (p - q) * (p - q) + b.norm_sqr()).sqrt()
        }
        _ => eigh(a).0[0],
    }
}

pub fn lambda_max(a: &CMat) -> f64 {
    match a.nrows() {
        0 => f64::NEG_INFINITY,
        _ => *eigh(a).0.last().unwrap(),
    }
}

/// Singular values in descending order.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return vec![];
    }
    let mut s: Vec<f64> = a.clone().singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

pub fn sigma_min(a: &CMat) -> f64 {
    if a.nrows() != a.ncols() {
        let s = singular_values(a);
        return if a.nrows() < a.ncols() { 0.0 } else { *s.last().unwrap_or(&0.0) };
    }
    singular_values(a).last().copied().unwrap_or(f64::INFINITY)
}

pub fn op_norm(a: &CMat) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Orthonormal basis of the numerical kernel: right singular vectors with
/// `σ ≤ tol·σ_max` (absolute `tol` when `A = 0`).
pub fn kernel_basis(a: &CMat, tol: f64) -> CMat {
    let n = a.ncols();
    if n == 0 {
        return zeros(0, 0);
    }
    let sq = if a.nrows() < n {
        let mut m = zeros(n, n);
        m.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        m
    } else {
        a.clone()
    };
    let svd = sq.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return eye(n);
    }
    let cut = tol * smax;
    let cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] <= cut)
        .collect();
    let mut b = zeros(n, cols.len());
    for (j, &k) in cols.iter().enumerate() {
        let row = vt.row(k).adjoint();
        b.set_column(j, &row);
    }
    b
}

/// Kernel of `A*`.
pub fn cokernel_basis(a: &CMat, tol: f64) -> CMat {
    kernel_basis(&a.adjoint(), tol)
}

pub fn numerical_rank(a: &CMat, tol: f64) -> usize {
    a.ncols() - kernel_basis(a, tol).ncols()
}

/// Orthonormal basis of the column space (rank cut at `tol·σ_max`).
pub fn range_basis(a: &CMat, tol: f64) -> CMat {
    if a.ncols() == 0 || a.nrows() == 0 {
        return zeros(a.nrows(), 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| smax > 0.0 && svd.singular_values[k] > tol * smax)
        .collect();
    let mut b = zeros(a.nrows(), keep.len());
    for (j, &k) in keep.iter().enumerate() {
        b.set_column(j, &u.column(k));
    }
    b
}

/// Sine of the largest principal angle between two orthonormal bases;
/// 1 when the dimensions differ.
pub fn subspace_angle(a: &CMat, b: &CMat) -> f64 {
    if a.ncols() != b.ncols() {
        return 1.0;
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    let proj = b * b.adjoint();
    let resid = a - &proj * a;
    op_norm(&resid).min(1.0)
}

/// Eigenvalues of a general complex matrix.
pub fn eigenvalues(a: &CMat) -> Vec<C64> {
    match a.nrows() {
        0 => vec![],
        1 => vec![a[(0, 0)]],
        _ => a
            .clone()
            .schur()
            .eigenvalues()
            .map(|v| v.iter().copied().collect())
            .unwrap_or_default(),
    }
}

pub fn inverse(a: &CMat) -> Option<CMat> {
    if a.nrows() == 0 {
        return Some(zeros(0, 0));
    }
    if sigma_min(a) <= 1e-14 * op_norm(a).max(1e-300) {
        return None;
    }
    a.clone().try_inverse()
}

pub fn condition_number(a: &CMat) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_cmat<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> CMat {
    CMat::from_fn(n, m, |_, _| c(gaussian(rng), gaussian(rng)))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    herm_part(&random_cmat(rng, n, n))
}

pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = random_cmat(rng, n, n);
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    // fix column phases so the distribution is Haar
    let mut u = q;
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { re(1.0) };
        for i in 0..n {
            u[(i, j)] *= ph;
        }
    }
    u
}

/// `U diag(s) V*` with singular values log-uniform in `[1, cond]`.
pub fn random_conditioned<R: Rng + ?Sized>(rng: &mut R, n: usize, cond: f64) -> CMat {
    let u = random_unitary(rng, n);
    let v = random_unitary(rng, n);
    let lc = cond.max(1.0).ln();
    let mut d = zeros(n, n);
    for k in 0..n {
        let s = match k {
            0 => 1.0,
            1 => cond.max(1.0),
            _ => (rng.random::<f64>() * lc).exp(),
        };
        d[(k, k)] = re(s);
    }
    u * d * v.adjoint()
}

/// Random unit vector in `C^n`.
pub fn random_unit<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    let v = CVec::from_fn(n, |_, _| c(gaussian(rng), gaussian(rng)));
    let nv = v.norm();
    v / re(nv)
}

/// Project a Hermitian matrix onto the PSD cone; returns the projection and
/// the smallest eigenvalue before clipping.
pub fn psd_project(a: &CMat) -> (CMat, f64) {
    let (vals, vecs) = eigh(a);
    let lmin = vals.first().copied().unwrap_or(0.0);
    if lmin >= 0.0 {
        return (herm_part(a), lmin);
    }
    let n = a.nrows();
    let mut d = zeros(n, n);
    for (k, &l) in vals.iter().enumerate() {
        d[(k, k)] = re(l.max(0.0));
    }
    (&vecs * d * vecs.adjoint(), lmin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn split_of_i_identity() {
        let a = eye(3) * I;
        let (r, i) = hermitian_split(&a);
        assert!(frob(&r) < 1e-15);
        assert!(frob(&(i - eye(3))) < 1e-15);
    }

    #[test]
    fn split_of_nilpotent() {
        let a = rmat(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let (r, i) = hermitian_split(&a);
        assert!(frob(&(r - rmat(2, 2, &[0.0, 0.5, 0.5, 0.0]))) < 1e-15);
        let want = cmat(2, 2, &[re(0.0), c(0.0, -0.5), c(0.0, 0.5), re(0.0)]);
        assert!(frob(&(i - want)) < 1e-15);
    }

    #[test]
    fn kernel_of_diag() {
        let b = kernel_basis(&rmat(2, 2, &[0.0, 0.0, 0.0, 1.0]), RANK_TOL);
        assert_eq!(b.ncols(), 1);
        assert!((b[(0, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_of_zero_is_everything() {
        assert_eq!(kernel_basis(&zeros(3, 3), RANK_TOL).ncols(), 3);
    }

    #[test]
    fn rank_one_kernel_is_orthogonal_to_v() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let u = random_unit(&mut rng, 3);
            let v = random_unit(&mut rng, 3);
            let a = &u * v.adjoint();
            let b = kernel_basis(&a, RANK_TOL);
            assert_eq!(b.ncols(), 2);
            assert!((v.adjoint() * &b).norm() < 1e-12);
            assert!(frob(&(b.adjoint() * &b - eye(2))) < 1e-12);
        }
    }

    #[test]
    fn conditioned_matrix_has_requested_condition() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_conditioned(&mut rng, 4, 10.0);
        assert!((condition_number(&a) - 10.0).abs() < 1e-8);
    }

    #[test]
    fn lambda_min_closed_form_matches_eigh() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let h = random_hermitian(&mut rng, 2);
            assert!((lambda_min(&h) - eigh(&h).0[0]).abs() < 1e-12);
        }
    }
}
