//! Quasi-symmetry checks, kernel identities for semibounded matrices and
//! patch sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, RANK_TOL};
use crate::symbol::{MatrixSymbol, PhasePoint, TangentDirection};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SemiboundedCheck {
    pub hypothesis_holds: bool,
    pub kernel_equalities_hold: bool,
    pub max_subspace_angle: f64,
    pub kernel_dim: usize,
}

/// Checks `ker Q = ker Q* = ker Re(zQ) ∩ ker Im(zQ)` and `Ran Q ⊥ ker Q`
/// under the hypothesis `Im(zQ) ⪰ 0`.
pub fn semibounded_kernel_check(q: &CMat, z: C64, tol: f64) -> SemiboundedCheck {
    let zq = q * z;
    let (r, i) = linalg::hermitian_split(&zq);
    let scale = linalg::op_norm(q).max(1.0);
    let hypothesis_holds = linalg::lambda_min(&i) >= -tol * scale;
    let k = linalg::kernel_basis(q, RANK_TOL);
    let kstar = linalg::cokernel_basis(q, RANK_TOL);
    let n = q.ncols();
    let mut stacked = CMat::zeros(2 * n, n);
    stacked.view_mut((0, 0), (n, n)).copy_from(&r);
    stacked.view_mut((n, 0), (n, n)).copy_from(&i);
    let kri = linalg::kernel_basis(&stacked, RANK_TOL);
    let mut angle = linalg::subspace_angle(&k, &kstar).max(linalg::subspace_angle(&k, &kri));
    if k.ncols() > 0 {
        let qn = linalg::op_norm(q).max(1e-300);
        angle = angle.max(linalg::op_norm(&(k.adjoint() * q)) / qn);
    }
    SemiboundedCheck {
        hypothesis_holds,
        kernel_equalities_hold: hypothesis_holds && angle <= tol.max(1e-6),
        max_subspace_angle: angle,
        kernel_dim: k.ncols(),
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QsVerdict {
    Yes,
    No,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuasiSymmetryCheck {
    pub verdict: QsVerdict,
    pub c_margin: f64,
    pub c_used: f64,
    pub im_min_eig: f64,
}

impl QuasiSymmetryCheck {
    pub fn yes(&self) -> bool {
        matches!(self.verdict, QsVerdict::Yes)
    }
}

#[derive(Debug, Clone, Copy)]
pub enum CChoice {
    Fixed(f64),
    Auto,
}

pub const C_AUTO_MAX: f64 = 1e6;
pub const IM_TOL: f64 = 1e-10;

struct QsData {
    re_dq: Vec<CMat>,
    qq: Vec<CMat>,
    im_min: f64,
}

fn margin(d: &QsData, c: f64) -> f64 {
    d.re_dq
        .par_iter()
        .zip(&d.qq)
        .map(|(a, b)| linalg::lambda_min(&(a + b * linalg::re(c))))
        .reduce(|| f64::INFINITY, f64::min)
}

/// `Re(∂_V Q) + C·Q*Q ≻ 0` and `Im Q ⪰ 0` over the samples.
pub fn is_quasi_symmetric(
    q: &MatrixSymbol,
    samples: &[PhasePoint],
    v: &TangentDirection,
    c: CChoice,
) -> Result<QuasiSymmetryCheck> {
    if samples.is_empty() {
        return Err(Error::Input("no samples".into()));
    }
    if v.norm() == 0.0 {
        return Err(Error::Input("vector field vanishes".into()));
    }
    let parts: Vec<(CMat, CMat, f64)> = samples
        .par_iter()
        .map(|w| -> Result<_> {
            let qw = q.eval(w)?;
            let dq = q.directional_derivative(w, v)?;
            let (re_dq, _) = linalg::hermitian_split(&dq);
            let (_, im_q) = linalg::hermitian_split(&qw);
            Ok((re_dq, qw.adjoint() * &qw, linalg::lambda_min(&im_q)))
        })
        .collect::<Result<_>>()?;
    let im_min = parts.iter().map(|p| p.2).fold(f64::INFINITY, f64::min);
    let (re_dq, qq): (Vec<CMat>, Vec<CMat>) = parts.into_iter().map(|(a, b, _)| (a, b)).unzip();
    let d = QsData { re_dq, qq, im_min };
    let c_used = match c {
        CChoice::Fixed(c) => c,
        CChoice::Auto => {
            if margin(&d, 0.0) > 0.0 {
                0.0
            } else if margin(&d, C_AUTO_MAX) <= 0.0 {
                C_AUTO_MAX
            } else {
                // smallest C with a positive margin, then doubled
                let (mut lo, mut hi) = (0.0, C_AUTO_MAX);
                for _ in 0..80 {
                    let mid = if lo == 0.0 { hi * 1e-3 } else { (lo * hi).sqrt() };
                    if margin(&d, mid) > 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                    if hi - lo <= 1e-6 * hi {
                        break;
                    }
                }
                (2.0 * hi).min(C_AUTO_MAX)
            }
        }
    };
    let c_margin = margin(&d, c_used);
    let verdict = if c_margin > 0.0 && d.im_min >= -IM_TOL { QsVerdict::Yes } else { QsVerdict::No };
    Ok(QuasiSymmetryCheck { verdict, c_margin, c_used, im_min_eig: d.im_min })
}

/// Center, the `±radius` points along each axis in `axes`, and `count`
/// uniform points of the ball spanned by `axes`.
pub fn sample_patch(center: &PhasePoint, radius: f64, count: usize, axes: &[usize], seed: u64) -> Vec<PhasePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![center.clone()];
    for &k in axes {
        out.push(center.shifted(k, radius));
        out.push(center.shifted(k, -radius));
    }
    let d = axes.len();
    while out.len() < count + 1 + 2 * d {
        let v: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        if v.iter().map(|x| x * x).sum::<f64>() > 1.0 {
            continue;
        }
        let mut c = center.coords.clone();
        for (i, &k) in axes.iter().enumerate() {
            c[k] += radius * v[i];
        }
        out.push(PhasePoint { coords: c, split: None });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, re, rmat, I};
    use crate::symbol::models::model_library;
    use crate::symbol::{Polynomial, SPoly};
    use serde_json::{json, Value};

    #[test]
    fn semibounded_examples() {
        let q = crate::linalg::cmat(2, 2, &[re(0.0), re(0.0), re(0.0), I]);
        let r = semibounded_kernel_check(&q, re(1.0), 1e-10);
        assert!(r.hypothesis_holds && r.kernel_equalities_hold);
        assert!(r.max_subspace_angle < 1e-14);
        let n = rmat(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let r = semibounded_kernel_check(&n, re(1.0), 1e-10);
        assert!(!r.hypothesis_holds);
    }

    #[test]
    fn w2iw3_product_is_quasi_symmetric() {
        let p = model_library("w2iw3", &Value::Null).unwrap();
        let m = rmat(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let q = MatrixSymbol::product(vec![MatrixSymbol::constant(4, m), p]);
        let s = sample_patch(&PhasePoint::origin(4), 0.2, 100, &[0, 1, 2], 3);
        let r = is_quasi_symmetric(&q, &s, &TangentDirection::axis(4, 0), CChoice::Auto).unwrap();
        assert!(r.yes());
        assert_eq!(r.c_used, 0.0);
        assert!((r.c_margin - 1.0).abs() < 1e-12);
        assert!(r.im_min_eig.abs() < 1e-14);
    }

    #[test]
    fn zero_symbol_is_not() {
        let q = MatrixSymbol::constant(2, CMat::zeros(2, 2));
        let s = sample_patch(&PhasePoint::origin(2), 0.1, 10, &[0, 1], 1);
        let r = is_quasi_symmetric(&q, &s, &TangentDirection::axis(2, 0), CChoice::Auto).unwrap();
        assert!(!r.yes());
    }

    #[test]
    fn scalar_tau_plus_it2() {
        let q = model_library("scalar", &json!({"k": 2})).unwrap();
        let s = sample_patch(&PhasePoint::origin(2), 0.5, 50, &[0, 1], 2);
        let r = is_quasi_symmetric(&q, &s, &TangentDirection::axis(2, 1), CChoice::Auto).unwrap();
        assert!(r.yes());
    }

    #[test]
    fn auto_c_finds_positive_margin() {
        // Re ∂_1 Q = diag(1, -1) needs C·Q*Q to lift the second entry
        let w1 = SPoly::var(2, 0);
        let z = SPoly::zero(2);
        let one = SPoly::constant(2, re(1.0));
        let q = MatrixSymbol::polynomial(Polynomial::from_entries(&[
            vec![w1.clone(), z.clone()],
            vec![z, one.sub(&w1).scale(c(1.0, 0.0))],
        ]));
        let s = sample_patch(&PhasePoint::origin(2), 0.1, 20, &[0, 1], 5);
        let r = is_quasi_symmetric(&q, &s, &TangentDirection::axis(2, 0), CChoice::Auto).unwrap();
        assert!(r.c_used > 0.0);
        assert!(r.c_margin > 0.0);
    }
}
