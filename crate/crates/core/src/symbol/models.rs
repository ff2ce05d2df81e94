//! Built-in model symbols, evaluated at fiber normalization `|ξ| = 1`.
//!
//! Coordinate conventions: two-variable models use `(t, τ)` or `(w1, w2)`;
//! four-variable models use `(t, x, τ, ξ)` or `(w1, w2, w3, w4)`.

use serde_json::{json, Map, Value};

use super::polynomial::{Polynomial, SPoly};
use super::{MatrixSymbol, SymbolKind};
use crate::error::{Error, Result};
use crate::linalg::{c, re, CMat, I};

pub struct ModelInfo {
    pub name: &'static str,
    pub phase_dim: usize,
    pub params: &'static str,
    pub description: &'static str,
}

pub const MODELS: &[ModelInfo] = &[
    ModelInfo { name: "prtrem", phase_dim: 2, params: "", description: "[[w1-w2, w2],[w2, -w1-w2]]" },
    ModelInfo { name: "jordan", phase_dim: 2, params: "", description: "[[w1, 1],[0, w2]]" },
    ModelInfo { name: "w2iw3", phase_dim: 4, params: "", description: "[[w2+i w3, w1],[w1, w2-i w3]]" },
    ModelInfo { name: "saex", phase_dim: 4, params: "", description: "[[xi1, x1 xi2],[x1 xi2, -xi1]] on (x1, x2, xi1, xi2)" },
    ModelInfo { name: "ex1", phase_dim: 2, params: "", description: "F(t) = [[t^2, t^3],[t^3, t^4]] on (t, tau)" },
    ModelInfo { name: "ex2", phase_dim: 2, params: "", description: "F(t) = [[t^2+t^8, t^3-t^7],[t^3-t^7, t^4+t^6]] on (t, tau)" },
    ModelInfo { name: "scalar", phase_dim: 2, params: "k (even, default 2)", description: "tau + i t^k" },
    ModelInfo { name: "identity", phase_dim: 2, params: "n (default 2), phase_dim (default 2)", description: "constant Id_n" },
    ModelInfo { name: "subex", phase_dim: 4, params: "alpha, beta", description: "tau Id + alpha diag(xi, -xi) + i (t - beta x)^2 |xi| Id" },
    ModelInfo { name: "simplex", phase_dim: 4, params: "f in {ex1, ex2, t2, zero, id} (default ex2)", description: "tau Id + i F(t) |xi|" },
    ModelInfo { name: "sex", phase_dim: 4, params: "", description: "tau M(t) + i F(t, x), M = [[2, t],[t, 2]], F = [[t^2, t x],[t x, x^2 + t^4]]" },
];

fn obj(params: &Value) -> Result<Map<String, Value>> {
    match params {
        Value::Null => Ok(Map::new()),
        Value::Object(m) => Ok(m.clone()),
        _ => Err(Error::InvalidParams("parameters must be a JSON object".into())),
    }
}

fn only(m: &Map<String, Value>, allowed: &[&str]) -> Result<()> {
    for k in m.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::InvalidParams(format!("unexpected parameter `{k}`")));
        }
    }
    Ok(())
}

fn num(m: &Map<String, Value>, key: &str, default: Option<f64>) -> Result<f64> {
    match m.get(key) {
        Some(v) => v
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::InvalidParams(format!("`{key}` must be a real number"))),
        None => default.ok_or_else(|| Error::InvalidParams(format!("missing parameter `{key}`"))),
    }
}

fn model(name: &str, params: Value, inner: MatrixSymbol) -> MatrixSymbol {
    MatrixSymbol {
        dim: inner.dim,
        phase_dim: inner.phase_dim,
        homogeneous: inner.homogeneous,
        kind: SymbolKind::Model { name: name.to_string(), params, inner: Box::new(inner) },
    }
}

/// Entries of a named F-curve as polynomials in variable `t_var` of `nvars`.
pub fn f_curve(name: &str, nvars: usize, t_var: usize) -> Result<Vec<Vec<SPoly>>> {
    let t = SPoly::var(nvars, t_var);
    let z = SPoly::zero(nvars);
    let one = SPoly::constant(nvars, re(1.0));
    Ok(match name {
        "ex1" => vec![vec![t.pow(2), t.pow(3)], vec![t.pow(3), t.pow(4)]],
        "ex2" => {
            let off = t.pow(3).sub(&t.pow(7));
            vec![vec![t.pow(2).add(&t.pow(8)), off.clone()], vec![off, t.pow(4).add(&t.pow(6))]]
        }
        "t2" => vec![vec![t.pow(2), z.clone()], vec![z, t.pow(2)]],
        "zero" => vec![vec![z.clone(), z.clone()], vec![z.clone(), z]],
        "id" => vec![vec![one.clone(), z.clone()], vec![z, one]],
        _ => return Err(Error::InvalidParams(format!("unknown F-curve `{name}`"))),
    })
}

fn scale_table(tab: &[Vec<SPoly>], s: crate::linalg::C64) -> Vec<Vec<SPoly>> {
    tab.iter().map(|r| r.iter().map(|p| p.scale(s)).collect()).collect()
}

fn add_table(a: &[Vec<SPoly>], b: &[Vec<SPoly>]) -> Vec<Vec<SPoly>> {
    a.iter().zip(b).map(|(ra, rb)| ra.iter().zip(rb).map(|(p, q)| p.add(q)).collect()).collect()
}

fn diag_table(d: &[SPoly]) -> Vec<Vec<SPoly>> {
    let n = d.len();
    let nv = d[0].nvars;
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { d[i].clone() } else { SPoly::zero(nv) }).collect())
        .collect()
}

fn poly(tab: &[Vec<SPoly>]) -> MatrixSymbol {
    MatrixSymbol::polynomial(Polynomial::from_entries(tab))
}

/// Build a named model.
pub fn model_library(name: &str, params: &Value) -> Result<MatrixSymbol> {
    let m = obj(params)?;
    let p = Value::Object(m.clone());
    match name {
        "prtrem" => {
            only(&m, &[])?;
            let (w1, w2) = (SPoly::var(2, 0), SPoly::var(2, 1));
            let tab = vec![
                vec![w1.sub(&w2), w2.clone()],
                vec![w2.clone(), w1.scale(re(-1.0)).sub(&w2)],
            ];
            Ok(model(name, p, poly(&tab)))
        }
        "jordan" => {
            only(&m, &[])?;
            let tab = vec![
                vec![SPoly::var(2, 0), SPoly::constant(2, re(1.0))],
                vec![SPoly::zero(2), SPoly::var(2, 1)],
            ];
            Ok(model(name, p, poly(&tab)))
        }
        "w2iw3" => {
            only(&m, &[])?;
            let (w1, w2, w3) = (SPoly::var(4, 0), SPoly::var(4, 1), SPoly::var(4, 2));
            let tab = vec![
                vec![w2.add(&w3.scale(I)), w1.clone()],
                vec![w1, w2.sub(&w3.scale(I))],
            ];
            Ok(model(name, p, poly(&tab)))
        }
        "saex" => {
            only(&m, &[])?;
            let (x1, xi1, xi2) = (SPoly::var(4, 0), SPoly::var(4, 2), SPoly::var(4, 3));
            let off = x1.mul(&xi2);
            let tab = vec![vec![xi1.clone(), off.clone()], vec![off, xi1.scale(re(-1.0))]];
            Ok(model(name, p, poly(&tab).with_homogeneous(true)))
        }
        "ex1" | "ex2" => {
            only(&m, &[])?;
            Ok(model(name, p, poly(&f_curve(name, 2, 0)?)))
        }
        "scalar" => {
            only(&m, &["k"])?;
            let k = num(&m, "k", Some(2.0))?;
            if k < 0.0 || k.fract() != 0.0 {
                return Err(Error::InvalidParams("`k` must be a non-negative integer".into()));
            }
            let q = SPoly::var(2, 1).add(&SPoly::var(2, 0).pow(k as u32).scale(I));
            Ok(model(name, p, poly(&[vec![q]])))
        }
        "identity" => {
            only(&m, &["n", "phase_dim"])?;
            let n = num(&m, "n", Some(2.0))?;
            let pd = num(&m, "phase_dim", Some(2.0))?;
            if n < 1.0 || n.fract() != 0.0 || pd < 2.0 || pd.fract() != 0.0 || (pd as usize) % 2 != 0 {
                return Err(Error::InvalidParams("`n` ≥ 1 and even `phase_dim` ≥ 2 required".into()));
            }
            let s = MatrixSymbol::constant(pd as usize, CMat::identity(n as usize, n as usize));
            Ok(model(name, p, s))
        }
        "subex" => {
            only(&m, &["alpha", "beta"])?;
            let alpha = num(&m, "alpha", None)?;
            let beta = num(&m, "beta", None)?;
            let (t, x, tau, xi) = (SPoly::var(4, 0), SPoly::var(4, 1), SPoly::var(4, 2), SPoly::var(4, 3));
            let real = add_table(
                &diag_table(&[tau.clone(), tau]),
                &diag_table(&[xi.scale(re(alpha)), xi.scale(re(-alpha))]),
            );
            let damp = t.sub(&x.scale(re(beta))).pow(2).scale(I);
            let damping = MatrixSymbol::product(vec![
                poly(&diag_table(&[damp.clone(), damp])),
                MatrixSymbol::abs_coordinate(4, 3),
            ]);
            let s = MatrixSymbol::sum(vec![poly(&real), damping]).with_homogeneous(true);
            Ok(model(name, p, s))
        }
        "simplex" => {
            only(&m, &["f"])?;
            let f = match m.get("f") {
                None => "ex2".to_string(),
                Some(Value::String(s)) => s.clone(),
                Some(_) => return Err(Error::InvalidParams("`f` must be a string".into())),
            };
            let tau = SPoly::var(4, 2);
            let real = diag_table(&[tau.clone(), tau]);
            let fi = scale_table(&f_curve(&f, 4, 0)?, I);
            let s = MatrixSymbol::sum(vec![
                poly(&real),
                MatrixSymbol::product(vec![poly(&fi), MatrixSymbol::abs_coordinate(4, 3)]),
            ])
            .with_homogeneous(true);
            Ok(model(name, json!({ "f": f }), s))
        }
        "sex" => {
            only(&m, &[])?;
            let (t, x, tau) = (SPoly::var(4, 0), SPoly::var(4, 1), SPoly::var(4, 2));
            let two = SPoly::constant(4, re(2.0));
            let mt = vec![vec![two.clone(), t.clone()], vec![t.clone(), two]];
            let f = vec![
                vec![t.pow(2), t.mul(&x)],
                vec![t.mul(&x), x.pow(2).add(&t.pow(4))],
            ];
            let tab: Vec<Vec<SPoly>> = mt
                .iter()
                .zip(&f)
                .map(|(rm, rf)| rm.iter().zip(rf).map(|(a, b)| a.mul(&tau).add(&b.scale(I))).collect())
                .collect();
            Ok(model(name, p, poly(&tab)))
        }
        _ => Err(Error::UnknownModel(name.to_string())),
    }
}

/// Known symmetrizer for models that come with one.
pub fn known_symmetrizer(symbol: &MatrixSymbol) -> Option<CMat> {
    match symbol.model_name()? {
        "w2iw3" => Some(crate::linalg::rmat(2, 2, &[0.0, 1.0, 1.0, 0.0])),
        "simplex" | "sex" | "subex" => Some(CMat::identity(symbol.dim, symbol.dim)),
        "scalar" => Some(CMat::identity(1, 1)),
        "identity" => Some(CMat::identity(symbol.dim, symbol.dim) * c(0.0, 1.0)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frob, rmat};
    use crate::symbol::{PhasePoint, TangentDirection};

    #[test]
    fn prtrem_vanishes_at_origin() {
        let p = model_library("prtrem", &Value::Null).unwrap();
        assert_eq!(frob(&p.eval(&PhasePoint::origin(2)).unwrap()), 0.0);
    }

    #[test]
    fn prtrem_w1_derivative() {
        let p = model_library("prtrem", &Value::Null).unwrap();
        let w = PhasePoint::new(vec![0.3, -0.7]).unwrap();
        let d = p.directional_derivative(&w, &TangentDirection::axis(2, 0)).unwrap();
        assert!(frob(&(d - rmat(2, 2, &[1.0, 0.0, 0.0, -1.0]))) < 1e-15);
    }

    #[test]
    fn ex2_at_one() {
        let f = model_library("ex2", &Value::Null).unwrap();
        let v = f.eval(&PhasePoint::new(vec![1.0, 0.0]).unwrap()).unwrap();
        assert!(frob(&(v - rmat(2, 2, &[2.0, 0.0, 0.0, 2.0]))) < 1e-14);
    }

    #[test]
    fn ex1_third_derivative() {
        let f = model_library("ex1", &Value::Null).unwrap();
        let d = f
            .directional_derivative_n(&PhasePoint::origin(2), &TangentDirection::axis(2, 0), 3)
            .unwrap();
        assert!(frob(&(d - rmat(2, 2, &[0.0, 6.0, 6.0, 0.0]))) < 1e-14);
    }

    #[test]
    fn identity_three() {
        let s = model_library("identity", &json!({"n": 3})).unwrap();
        let v = s.eval(&PhasePoint::new(vec![0.4, 9.0]).unwrap()).unwrap();
        assert!(frob(&(v - CMat::identity(3, 3))) == 0.0);
    }

    #[test]
    fn subex_symbol() {
        let s = model_library("subex", &json!({"alpha": 1.0, "beta": 2.0})).unwrap();
        let (t, x, tau, xi) = (0.3, 0.1, 0.2, -1.0);
        let v = s.eval(&PhasePoint::new(vec![t, x, tau, xi]).unwrap()).unwrap();
        let d: f64 = (t - 2.0 * x) * (t - 2.0 * x) * xi.abs();
        assert!((v[(0, 0)] - c(tau + xi, d)).norm() < 1e-14);
        assert!((v[(1, 1)] - c(tau - xi, d)).norm() < 1e-14);
        assert!(v[(0, 1)].norm() == 0.0);
    }

    #[test]
    fn bad_params() {
        assert!(matches!(model_library("subex", &json!({"alpha": 1.0})), Err(Error::InvalidParams(_))));
        assert!(matches!(model_library("nope", &Value::Null), Err(Error::UnknownModel(_))));
        assert!(model_library("prtrem", &json!({"x": 1})).is_err());
    }
}
