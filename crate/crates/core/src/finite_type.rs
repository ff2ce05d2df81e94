//! Finite-type verdicts on the adapted chart `Σ = {τ = τ0}`, `V = ±∂_τ`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::quasisym::{is_quasi_symmetric, sample_patch, CChoice, QuasiSymmetryCheck};
use crate::spectral::{approximation_property_check, sigma_patch, ApproxParams, ApproxPropertyCheck};
use crate::sublevel::{derivative_order, fit_sublevel_exponent, DerivativeParams, SublevelReport, FIT_TOL};
use crate::symbol::models::known_symmetrizer;
use crate::symbol::{HypersurfaceChart, LinePart, MatrixSymbol, PhasePoint, SymbolLine};
use crate::symmetrizer::{assess_symmetrizer, find_symmetrizer, RhoMode, SymmetrizerParams, SymmetrizerResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FiniteTypeVerdict {
    FiniteType,
    NotFiniteType,
    Inconclusive,
}

impl FiniteTypeVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            FiniteTypeVerdict::FiniteType => "finite_type",
            FiniteTypeVerdict::NotFiniteType => "not_finite_type",
            FiniteTypeVerdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FiniteTypeConfig {
    /// Symmetrizer before the `iρP*` shift; otherwise the model's own or a
    /// searched one.
    pub symmetrizer: Option<CMat>,
    pub search: SymmetrizerParams,
    pub reverse_v: bool,
    pub patch_radius: f64,
    pub patch_samples: usize,
    pub sigma_radius: f64,
    pub sigma_samples: usize,
    pub lattice: usize,
    pub lattice_radius: f64,
    pub window_half: f64,
    pub n_grid: usize,
    pub delta_range: (f64, f64),
    pub n_deltas: usize,
    pub k_max: usize,
    pub seed: u64,
}

impl Default for FiniteTypeConfig {
    fn default() -> Self {
        Self {
            symmetrizer: None,
            search: SymmetrizerParams::default(),
            reverse_v: false,
            patch_radius: 0.2,
            patch_samples: 120,
            sigma_radius: 0.1,
            sigma_samples: 40,
            lattice: 25,
            lattice_radius: 0.1,
            window_half: 1.0,
            n_grid: 20_000,
            delta_range: (1e-7, 1e-2),
            n_deltas: 16,
            k_max: 10,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FiniteTypeReport {
    pub quasi_symmetric: Option<QuasiSymmetryCheck>,
    pub symmetrizer: Option<SymmetrizerResult>,
    pub approx_property: Option<ApproxPropertyCheck>,
    /// `+∞` (serialized as null) when `Im Q` is definite on every line.
    pub mu: Option<f64>,
    pub elliptic: bool,
    pub k: Option<u32>,
    pub predicted_loss: Option<f64>,
    pub saturated_lines: usize,
    pub lines: Vec<SublevelReport>,
    pub verdict: FiniteTypeVerdict,
}

impl FiniteTypeReport {
    fn inconclusive(symmetrizer: Option<SymmetrizerResult>) -> Self {
        Self {
            quasi_symmetric: None,
            symmetrizer,
            approx_property: None,
            mu: None,
            elliptic: false,
            k: None,
            predicted_loss: None,
            saturated_lines: 0,
            lines: Vec::new(),
            verdict: FiniteTypeVerdict::Inconclusive,
        }
    }
}

/// Base points of the `t`-lines: `w0` plus offsets in the first two
/// tangential non-`t` coordinates (5×5 grid for 25 points).
pub fn lattice_points(chart: &HypersurfaceChart, w0: &PhasePoint, count: usize, radius: f64) -> Vec<PhasePoint> {
    let dirs: Vec<usize> = chart.tangential_indices().into_iter().filter(|&k| k != chart.t_index).take(2).collect();
    if count <= 1 || dirs.is_empty() {
        return vec![w0.clone()];
    }
    let side = if dirs.len() == 1 { count } else { (count as f64).sqrt().round().max(1.0) as usize };
    let step = |i: usize| if side == 1 { 0.0 } else { -radius + 2.0 * radius * i as f64 / (side - 1) as f64 };
    let mut out = Vec::with_capacity(count);
    if dirs.len() == 1 {
        for i in 0..side {
            out.push(w0.shifted(dirs[0], step(i)));
        }
    } else {
        for i in 0..side {
            for j in 0..side {
                out.push(w0.shifted(dirs[0], step(i)).shifted(dirs[1], step(j)));
            }
        }
    }
    out
}

pub fn finite_type_verdict(
    p: &MatrixSymbol,
    w0: &PhasePoint,
    chart: &HypersurfaceChart,
    cfg: &FiniteTypeConfig,
) -> Result<FiniteTypeReport> {
    if chart.phase_dim != p.phase_dim || w0.dim() != p.phase_dim {
        return Err(Error::Dimension("chart, point and symbol disagree on phase dimension".into()));
    }
    let v = if cfg.reverse_v { chart.transversal().neg() } else { chart.transversal() };
    let all: Vec<usize> = (0..p.phase_dim).collect();
    let patch = sample_patch(w0, cfg.patch_radius, cfg.patch_samples, &all, cfg.seed);

    let m = match cfg.symmetrizer.clone().or_else(|| known_symmetrizer(p)) {
        Some(m) => m,
        None => {
            let search = SymmetrizerParams { rho: RhoMode::Off, ..cfg.search.clone() };
            let r = find_symmetrizer(p, &patch, &v, &search)?;
            if !r.feasible {
                return Ok(FiniteTypeReport::inconclusive(Some(r)));
            }
            r.m
        }
    };
    let sym = assess_symmetrizer(p, &patch, &v, &m, &SymmetrizerParams { rho: RhoMode::Auto, ..cfg.search.clone() })?;
    let q = sym.q_symbol(p);
    let qs = is_quasi_symmetric(&q, &patch, &v, CChoice::Auto)?;
    let sig = sigma_patch(chart, w0, cfg.sigma_radius, cfg.sigma_samples, cfg.seed ^ 0x9e37);
    let approx = approximation_property_check(&q, chart, w0, &sig, &ApproxParams::default())?;

    let t0 = w0.coords[chart.t_index];
    let window = (t0 - cfg.window_half, t0 + cfg.window_half);
    let lines: Vec<SublevelReport> = lattice_points(chart, w0, cfg.lattice, cfg.lattice_radius)
        .iter()
        .map(|b| {
            let line = SymbolLine { symbol: &q, base: b.coords.clone(), index: chart.t_index, part: LinePart::Im };
            fit_sublevel_exponent(&line, window, cfg.delta_range, cfg.n_deltas, cfg.n_grid)
        })
        .collect::<Result<_>>()?;
    let line0 = SymbolLine { symbol: &q, base: w0.coords.clone(), index: chart.t_index, part: LinePart::Im };
    let k = derivative_order(&line0, window, &DerivativeParams { k_max: cfg.k_max, seed: cfg.seed, ..Default::default() })?;

    let saturated_lines = lines.iter().filter(|l| l.saturated).count();
    let elliptic = lines.iter().all(|l| l.elliptic());
    let finite: Vec<&SublevelReport> = lines.iter().filter(|l| !l.saturated && !l.elliptic()).collect();
    let fits_ok = finite.iter().all(|l| l.fit_r2 >= 0.99);
    let mu = if saturated_lines > 0 || !fits_ok {
        None
    } else if elliptic {
        Some(f64::INFINITY)
    } else {
        finite.iter().map(|l| l.mu_hat).reduce(f64::min)
    };
    let k = match (k, mu) {
        (Some(0), Some(m)) if m.is_infinite() => Some(0),
        (Some(k), Some(m)) if k > 0 && (m - 1.0 / k as f64).abs() <= FIT_TOL => Some(k),
        _ => None,
    };
    let predicted_loss = match (k, mu) {
        (Some(k), _) => Some(k as f64 / (k as f64 + 1.0)),
        (None, Some(m)) if m.is_infinite() => Some(0.0),
        (None, Some(m)) => Some(1.0 / (m + 1.0)),
        _ => None,
    };
    let verdict = if saturated_lines > 0 {
        FiniteTypeVerdict::NotFiniteType
    } else if sym.feasible && qs.yes() && approx.verdict && mu.is_some() {
        FiniteTypeVerdict::FiniteType
    } else {
        FiniteTypeVerdict::Inconclusive
    };
    Ok(FiniteTypeReport {
        quasi_symmetric: Some(qs),
        symmetrizer: Some(sym),
        approx_property: Some(approx),
        mu,
        elliptic,
        k,
        predicted_loss,
        saturated_lines,
        lines,
        verdict,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub verdict_p: FiniteTypeReport,
    pub verdict_apb: FiniteTypeReport,
    pub verdict_pstar: FiniteTypeReport,
}

impl InvarianceReport {
    pub fn verdicts(&self) -> [FiniteTypeVerdict; 3] {
        [self.verdict_p.verdict, self.verdict_apb.verdict, self.verdict_pstar.verdict]
    }

    /// Largest pairwise difference of the exponents (0 if all are equal or
    /// absent).
    pub fn mu_drift(&self) -> f64 {
        let mus: Vec<f64> = [&self.verdict_p, &self.verdict_apb, &self.verdict_pstar].iter().filter_map(|r| r.mu).collect();
        let mut d: f64 = 0.0;
        for a in &mus {
            for b in &mus {
                if a.is_infinite() || b.is_infinite() {
                    if a != b {
                        return f64::INFINITY;
                    }
                } else {
                    d = d.max((a - b).abs());
                }
            }
        }
        d
    }
}

/// Runs the verdict on `P`, `APB` (symmetrizer `B*MA⁻¹`) and `P*` (symmetrizer
/// `−M⁻¹`, field `−V`).
pub fn finite_type_invariance_fixture(
    p: &MatrixSymbol,
    a: &CMat,
    b: &CMat,
    w0: &PhasePoint,
    chart: &HypersurfaceChart,
    cfg: &FiniteTypeConfig,
) -> Result<InvarianceReport> {
    let ainv = linalg::inverse(a).ok_or_else(|| Error::Singular("A".into()))?;
    linalg::inverse(b).ok_or_else(|| Error::Singular("B".into()))?;
    let verdict_p = finite_type_verdict(p, w0, chart, cfg)?;
    let m = match (&cfg.symmetrizer, &verdict_p.symmetrizer) {
        (Some(m), _) => m.clone(),
        (None, Some(s)) => s.m.clone(),
        (None, None) => {
            let r = FiniteTypeReport::inconclusive(None);
            return Ok(InvarianceReport { verdict_p, verdict_apb: r.clone(), verdict_pstar: r });
        }
    };
    let pd = p.phase_dim;
    let apb = p.sandwich(&MatrixSymbol::constant(pd, a.clone()), &MatrixSymbol::constant(pd, b.clone()));
    let m_apb = b.adjoint() * &m * &ainv;
    let verdict_apb = finite_type_verdict(&apb, w0, chart, &FiniteTypeConfig { symmetrizer: Some(m_apb), ..cfg.clone() })?;
    let pstar = p.clone().adjoint();
    let verdict_pstar = match linalg::inverse(&m) {
        Some(minv) => finite_type_verdict(
            &pstar,
            w0,
            chart,
            &FiniteTypeConfig { symmetrizer: Some(-minv), reverse_v: !cfg.reverse_v, ..cfg.clone() },
        )?,
        None => FiniteTypeReport::inconclusive(None),
    };
    Ok(InvarianceReport { verdict_p, verdict_apb, verdict_pstar })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::models::model_library;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use serde_json::json;

    fn quick() -> FiniteTypeConfig {
        FiniteTypeConfig { lattice: 5, patch_samples: 60, ..Default::default() }
    }

    fn w0() -> PhasePoint {
        PhasePoint::new(vec![0.0, 0.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn simplex_ex2_is_finite_type() {
        let p = model_library("simplex", &json!({"f": "ex2"})).unwrap();
        let r = finite_type_verdict(&p, &w0(), &HypersurfaceChart::standard(4), &quick()).unwrap();
        assert_eq!(r.verdict, FiniteTypeVerdict::FiniteType, "{r:?}");
        assert!((r.mu.unwrap() - 1.0 / 6.0).abs() <= FIT_TOL);
        assert_eq!(r.k, Some(6));
        assert!((r.predicted_loss.unwrap() - 6.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn simplex_ex1_is_not() {
        let p = model_library("simplex", &json!({"f": "ex1"})).unwrap();
        let r = finite_type_verdict(&p, &w0(), &HypersurfaceChart::standard(4), &quick()).unwrap();
        assert_eq!(r.verdict, FiniteTypeVerdict::NotFiniteType);
        assert_eq!(r.saturated_lines, r.lines.len());
    }

    #[test]
    fn elliptic_identity() {
        let p = model_library("identity", &json!({"n": 2, "phase_dim": 2})).unwrap();
        let r = finite_type_verdict(&p, &PhasePoint::origin(2), &HypersurfaceChart::standard(2), &quick()).unwrap();
        assert_eq!(r.verdict, FiniteTypeVerdict::FiniteType, "{r:?}");
        assert!(r.elliptic && r.mu.unwrap().is_infinite());
        assert_eq!(r.predicted_loss, Some(0.0));
    }

    #[test]
    fn invariance_under_apb_and_adjoint() {
        let p = model_library("simplex", &json!({"f": "ex2"})).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = linalg::random_conditioned(&mut rng, 2, 4.0);
        let b = linalg::random_conditioned(&mut rng, 2, 4.0);
        let cfg = FiniteTypeConfig { lattice: 1, ..quick() };
        let r = finite_type_invariance_fixture(&p, &a, &b, &w0(), &HypersurfaceChart::standard(4), &cfg).unwrap();
        assert_eq!(r.verdicts(), [FiniteTypeVerdict::FiniteType; 3], "{:?}", r.verdict_pstar);
        assert!(r.mu_drift() <= FIT_TOL);
    }
}
