//! Principal type and constant characteristics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, re, CMat, C64, RANK_TOL};
use crate::symbol::{MatrixSymbol, PhasePoint, TangentDirection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Yes,
    No,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrincipalTypeVerdict {
    pub verdict: Verdict,
    pub witness: Option<TangentDirection>,
    /// `σ_min` of the pairing at the witness.
    pub pairing_condition: f64,
    pub kernel_dim: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SearchParams {
    pub grid_density: usize,
    pub refine_iters: usize,
    pub exclude_radial: bool,
    pub tol: f64,
    /// Below this many directions a negative answer is reported inconclusive.
    pub min_density: usize,
    pub rank_tol: f64,
    pub seed: u64,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            grid_density: 2000,
            refine_iters: 20,
            exclude_radial: true,
            tol: 1e-7,
            min_density: 200,
            rank_tol: RANK_TOL,
            seed: 0x5eed,
        }
    }
}

/// Kernel and cokernel bases plus the pairing components `V* ∂_k P U`.
struct PairingData {
    k: usize,
    parts: Vec<CMat>,
}

fn pairing_data(p: &MatrixSymbol, w: &PhasePoint, rank_tol: f64) -> Result<PairingData> {
    let m = p.eval(w)?;
    let u = linalg::kernel_basis(&m, rank_tol);
    let v = linalg::cokernel_basis(&m, rank_tol);
    if u.ncols() != v.ncols() {
        return Err(Error::Structural { kernel: u.ncols(), cokernel: v.ncols() });
    }
    let k = u.ncols();
    if k == 0 {
        return Ok(PairingData { k, parts: vec![] });
    }
    let grads = p.gradient(w)?;
    let vadj = v.adjoint();
    let parts = grads.iter().map(|g| &vadj * g * &u).collect();
    Ok(PairingData { k, parts })
}

impl PairingData {
    fn at(&self, nu: &[f64]) -> CMat {
        let mut b = CMat::zeros(self.k, self.k);
        for (part, &c) in self.parts.iter().zip(nu) {
            if c != 0.0 {
                b += part * re(c);
            }
        }
        b
    }

    fn sigma(&self, nu: &[f64]) -> f64 {
        linalg::sigma_min(&self.at(nu))
    }

    /// σ_min and its gradient in ν.
    fn sigma_grad(&self, nu: &[f64]) -> (f64, Vec<f64>) {
        let b = self.at(nu);
        let svd = b.svd(true, true);
        let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut imin = 0;
        for i in 1..svd.singular_values.len() {
            if svd.singular_values[i] < svd.singular_values[imin] {
                imin = i;
            }
        }
        let y = u.column(imin).clone_owned();
        let x = vt.row(imin).adjoint();
        let g = self
            .parts
            .iter()
            .map(|bk| (y.adjoint() * bk * &x)[(0, 0)].re)
            .collect();
        (svd.singular_values[imin], g)
    }
}

/// `⟨∂_ν P(w) u_j, v_i⟩` for orthonormal bases of `ker P(w)` and `ker P*(w)`.
pub fn cokernel_pairing(p: &MatrixSymbol, w: &PhasePoint, nu: &TangentDirection) -> Result<CMat> {
    cokernel_pairing_tol(p, w, nu, RANK_TOL)
}

pub fn cokernel_pairing_tol(p: &MatrixSymbol, w: &PhasePoint, nu: &TangentDirection, rank_tol: f64) -> Result<CMat> {
    if nu.components.len() != p.phase_dim {
        return Err(Error::Dimension("direction length differs from phase dimension".into()));
    }
    let d = pairing_data(p, w, rank_tol)?;
    if d.k == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    Ok(d.at(&nu.components))
}

fn normalize(v: &mut [f64]) -> bool {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= n);
    true
}

/// Candidate directions: ± coordinate axes followed by seeded Gaussian
/// directions, with a cone around `radial` removed when given.
pub fn direction_grid(dim: usize, count: usize, seed: u64, radial: Option<&[f64]>) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count + 2 * dim);
    for k in 0..dim {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; dim];
            v[k] = s;
            out.push(v);
        }
    }
    for _ in 0..count {
        let mut v: Vec<f64> = (0..dim).map(|_| linalg::gaussian(&mut rng)).collect();
        if normalize(&mut v) {
            out.push(v);
        }
    }
    if let Some(r) = radial {
        out.retain(|v| v.iter().zip(r).map(|(a, b)| a * b).sum::<f64>().abs() < 0.99);
    }
    out
}

fn radial_direction(p: &MatrixSymbol, w: &PhasePoint) -> Option<Vec<f64>> {
    if !p.homogeneous {
        return None;
    }
    let n = p.phase_dim / 2;
    let mut r = vec![0.0; p.phase_dim];
    r[n..].copy_from_slice(&w.coords[n..]);
    normalize(&mut r).then_some(r)
}

/// Decide principal type at `w` by maximizing `σ_min` of the pairing over
/// unit directions.
pub fn is_principal_type(p: &MatrixSymbol, w: &PhasePoint, search: &SearchParams) -> Result<PrincipalTypeVerdict> {
    let data = pairing_data(p, w, search.rank_tol)?;
    let dim = p.phase_dim;
    if data.k == 0 {
        return Ok(PrincipalTypeVerdict {
            verdict: Verdict::Yes,
            witness: Some(TangentDirection::axis(dim, 0)),
            pairing_condition: f64::INFINITY,
            kernel_dim: 0,
        });
    }
    let radial = if search.exclude_radial { radial_direction(p, w) } else { None };
    let dirs = direction_grid(dim, search.grid_density, search.seed, radial.as_deref());
    let scores: Vec<f64> = dirs.par_iter().map(|d| data.sigma(d)).collect();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    let mut nu = dirs[best].clone();
    let mut sigma = scores[best];
    let mut step = 0.1;
    for _ in 0..search.refine_iters {
        let (s, g) = data.sigma_grad(&nu);
        sigma = sigma.max(s);
        let mut moved = false;
        while step > 1e-8 {
            let mut cand: Vec<f64> = nu.iter().zip(&g).map(|(a, b)| a + step * b).collect();
            if !normalize(&mut cand) {
                break;
            }
            if let Some(r) = &radial {
                if cand.iter().zip(r).map(|(a, b)| a * b).sum::<f64>().abs() >= 0.99 {
                    step *= 0.5;
                    continue;
                }
            }
            let sc = data.sigma(&cand);
            if sc > sigma {
                nu = cand;
                sigma = sc;
                step *= 1.5;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let verdict = if sigma > search.tol {
        Verdict::Yes
    } else if search.grid_density < search.min_density {
        Verdict::Inconclusive
    } else {
        Verdict::No
    };
    Ok(PrincipalTypeVerdict {
        verdict,
        witness: Some(TangentDirection { components: nu, unit: true }),
        pairing_condition: sigma,
        kernel_dim: data.k,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Section {
    pub mean: [f64; 2],
    pub algebraic: usize,
    pub geometric: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleMultiplicity {
    pub point: Vec<f64>,
    pub sections: Vec<Section>,
    pub ambiguous: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantCharacteristics {
    pub verdict: Verdict,
    pub table: Vec<SampleMultiplicity>,
}

fn cluster(vals: &[C64], radius: f64) -> (Vec<Vec<C64>>, bool) {
    // single linkage
    let n = vals.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn root(l: &mut [usize], mut i: usize) -> usize {
        while l[i] != i {
            l[i] = l[l[i]];
            i = l[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (vals[i] - vals[j]).norm() <= radius {
                let (a, b) = (root(&mut label, i), root(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<C64>> = Default::default();
    for i in 0..n {
        let r = root(&mut label, i);
        groups.entry(r).or_default().push(vals[i]);
    }
    let groups: Vec<Vec<C64>> = groups.into_values().collect();
    let mut ambiguous = false;
    for a in 0..groups.len() {
        for b in a + 1..groups.len() {
            let d = groups[a]
                .iter()
                .flat_map(|x| groups[b].iter().map(move |y| (x - y).norm()))
                .fold(f64::INFINITY, f64::min);
            if d <= 2.0 * radius {
                ambiguous = true;
            }
        }
    }
    (groups, ambiguous)
}

/// Algebraic and geometric multiplicities of the eigenvalue sections with
/// `|λ| < eps`, compared across `samples`.
pub fn check_constant_characteristics(
    p: &MatrixSymbol,
    w0: &PhasePoint,
    eps: f64,
    samples: &[PhasePoint],
    radius: Option<f64>,
) -> Result<ConstantCharacteristics> {
    if eps <= 0.0 {
        return Err(Error::Input("eps must be positive".into()));
    }
    let r = radius.unwrap_or(eps / 10.0);
    let mut pts = vec![w0.clone()];
    pts.extend(samples.iter().cloned());
    let table: Vec<SampleMultiplicity> = pts
        .par_iter()
        .map(|w| -> Result<SampleMultiplicity> {
            let m = p.eval(w)?;
            let near: Vec<C64> = linalg::eigenvalues(&m).into_iter().filter(|l| l.norm() < eps).collect();
            let (groups, ambiguous) = cluster(&near, r);
            let n = m.nrows();
            let mut sections: Vec<Section> = groups
                .iter()
                .map(|g| {
                    let mean = g.iter().sum::<C64>() / re(g.len() as f64);
                    let shifted = &m - CMat::identity(n, n) * mean;
                    let geo = linalg::singular_values(&shifted).iter().filter(|&&s| s <= r).count();
                    Section { mean: [mean.re, mean.im], algebraic: g.len(), geometric: geo }
                })
                .collect();
            sections.sort_by_key(|s| (s.algebraic, s.geometric));
            Ok(SampleMultiplicity { point: w.coords.clone(), sections, ambiguous })
        })
        .collect::<Result<_>>()?;
    let key = |s: &SampleMultiplicity| s.sections.iter().map(|x| (x.algebraic, x.geometric)).collect::<Vec<_>>();
    let clear: Vec<&SampleMultiplicity> = table.iter().filter(|s| !s.ambiguous).collect();
    let mismatch = clear.windows(2).any(|w| key(w[0]) != key(w[1]));
    let verdict = if mismatch {
        Verdict::No
    } else if table.iter().any(|s| s.ambiguous) {
        Verdict::Inconclusive
    } else {
        Verdict::Yes
    };
    Ok(ConstantCharacteristics { verdict, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::models::model_library;
    use crate::symbol::{Polynomial, SPoly};
    use serde_json::Value;

    fn pt(c: &[f64]) -> PhasePoint {
        PhasePoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn prtrem_pairings() {
        let p = model_library("prtrem", &Value::Null).unwrap();
        let b = cokernel_pairing(&p, &pt(&[0.0, 0.0]), &TangentDirection::axis(2, 0)).unwrap();
        assert_eq!(b.nrows(), 2);
        assert!((linalg::sigma_min(&b) - 1.0).abs() < 1e-12);
        let b = cokernel_pairing(&p, &pt(&[0.0, 0.5]), &TangentDirection::axis(2, 0)).unwrap();
        assert_eq!(b.nrows(), 1);
        assert!(b[(0, 0)].norm() < 1e-12);
    }

    #[test]
    fn elliptic_pairing_is_empty() {
        let p = model_library("identity", &Value::Null).unwrap();
        let b = cokernel_pairing(&p, &pt(&[0.0, 0.0]), &TangentDirection::axis(2, 0)).unwrap();
        assert_eq!(b.nrows(), 0);
        let v = is_principal_type(&p, &pt(&[0.0, 0.0]), &SearchParams::default()).unwrap();
        assert_eq!(v.verdict, Verdict::Yes);
    }

    #[test]
    fn verdicts() {
        let s = SearchParams::default();
        let p = model_library("prtrem", &Value::Null).unwrap();
        let v = is_principal_type(&p, &pt(&[0.0, 0.0]), &s).unwrap();
        assert_eq!(v.verdict, Verdict::Yes);
        let w = v.witness.unwrap().components;
        assert!(w[0].abs() > 0.99, "{w:?}");
        assert_eq!(is_principal_type(&p, &pt(&[0.0, 0.5]), &s).unwrap().verdict, Verdict::No);
        let j = model_library("jordan", &Value::Null).unwrap();
        assert_eq!(is_principal_type(&j, &pt(&[0.0, 0.0]), &s).unwrap().verdict, Verdict::No);
    }

    #[test]
    fn coarse_search_is_inconclusive() {
        let s = SearchParams { grid_density: 10, ..Default::default() };
        let p = model_library("prtrem", &Value::Null).unwrap();
        assert_eq!(is_principal_type(&p, &pt(&[0.0, 0.5]), &s).unwrap().verdict, Verdict::Inconclusive);
    }

    #[test]
    fn constant_characteristics_examples() {
        let w1 = SPoly::var(2, 0);
        let z = SPoly::zero(2);
        let diag = MatrixSymbol::polynomial(Polynomial::from_entries(&[
            vec![w1.clone(), z.clone()],
            vec![z.clone(), w1.add(&SPoly::constant(2, re(1.0)))],
        ]));
        let samples: Vec<PhasePoint> = (0..9).map(|k| pt(&[-0.1 + 0.025 * k as f64, 0.0])).collect();
        let r = check_constant_characteristics(&diag, &pt(&[0.0, 0.0]), 0.5, &samples, None).unwrap();
        assert_eq!(r.verdict, Verdict::Yes);

        let jt = MatrixSymbol::polynomial(Polynomial::from_entries(&[
            vec![z.clone(), SPoly::constant(2, re(1.0))],
            vec![w1.clone(), z.clone()],
        ]));
        let samples: Vec<PhasePoint> = (1..9).map(|k| pt(&[0.01 * k as f64, 0.0])).collect();
        let r = check_constant_characteristics(&jt, &pt(&[0.0, 0.0]), 0.5, &samples, None).unwrap();
        assert_eq!(r.verdict, Verdict::No);

        let p = model_library("prtrem", &Value::Null).unwrap();
        let samples: Vec<PhasePoint> = (1..9).map(|k| pt(&[0.02 * k as f64, 0.01])).collect();
        let r = check_constant_characteristics(&p, &pt(&[0.0, 0.0]), 0.5, &samples, None).unwrap();
        assert_eq!(r.verdict, Verdict::No);
    }
}
