//! JSON symbol definitions.
//!
//! ```json
//! {"dimension": 2, "phase_dim": 2, "kind": "polynomial",
//!  "terms": [{"exponents": [1, 0], "coefficient": [[1, 0], [0, -1]]}]}
//! {"kind": "model", "model": "subex", "params": {"alpha": 1, "beta": 2}}
//! {"dimension": 1, "phase_dim": 2, "kind": "grid",
//!  "axes": [[0, 0.5, 1], [-1, 1]], "values": [[[0]], [[1]], ...]}
//! ```
//! Matrix entries are either real numbers or `[re, im]` pairs.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::grid::GridSymbol;
use super::models::model_library;
use super::polynomial::{Polynomial, Term};
use super::{MatrixSymbol, PhasePoint, SymbolKind};
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn value(&self) -> C64 {
        match self {
            Entry::Real(x) => C64::new(*x, 0.0),
            Entry::Complex([a, b]) => C64::new(*a, *b),
        }
    }
}

pub type MatrixJson = Vec<Vec<Entry>>;

pub fn matrix_from_json(m: &MatrixJson) -> Result<CMat> {
    let n = m.len();
    if n == 0 || m.iter().any(|r| r.len() != m[0].len()) {
        return Err(Error::Input("matrix rows must be nonempty and equal length".into()));
    }
    let cols = m[0].len();
    Ok(CMat::from_fn(n, cols, |i, j| m[i][j].value()))
}

pub fn matrix_to_json(a: &CMat) -> MatrixJson {
    (0..a.nrows())
        .map(|i| {
            (0..a.ncols())
                .map(|j| {
                    let z = a[(i, j)];
                    if z.im == 0.0 {
                        Entry::Real(z.re)
                    } else {
                        Entry::Complex([z.re, z.im])
                    }
                })
                .collect()
        })
        .collect()
}

/// `#[serde(with = "cmat_serde")]` for matrix fields.
pub mod cmat_serde {
    use super::{matrix_from_json, matrix_to_json, MatrixJson};
    use crate::linalg::CMat;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_to_json(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMat, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        matrix_from_json(&j).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermJson {
    pub exponents: Vec<u32>,
    pub coefficient: MatrixJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SymbolJson {
    Polynomial {
        dimension: usize,
        phase_dim: usize,
        terms: Vec<TermJson>,
        #[serde(default)]
        homogeneous: bool,
    },
    Model {
        model: String,
        #[serde(default)]
        params: Value,
    },
    Grid {
        dimension: usize,
        phase_dim: usize,
        axes: Vec<Vec<f64>>,
        values: Vec<MatrixJson>,
    },
}

impl SymbolJson {
    pub fn build(&self) -> Result<MatrixSymbol> {
        match self {
            SymbolJson::Polynomial { dimension, phase_dim, terms, homogeneous } => {
                if *phase_dim < 2 || phase_dim % 2 != 0 {
                    return Err(Error::Input("phase_dim must be even and ≥ 2".into()));
                }
                let mut ts = Vec::with_capacity(terms.len());
                for t in terms {
                    if t.exponents.len() != *phase_dim {
                        return Err(Error::Dimension("exponent vector length differs from phase_dim".into()));
                    }
                    let m = matrix_from_json(&t.coefficient)?;
                    if m.nrows() != *dimension || m.ncols() != *dimension {
                        return Err(Error::Dimension("coefficient shape differs from dimension".into()));
                    }
                    ts.push(Term { exps: t.exponents.clone(), coef: m });
                }
                if ts.is_empty() {
                    ts.push(Term { exps: vec![0; *phase_dim], coef: CMat::zeros(*dimension, *dimension) });
                }
                let p = Polynomial { dim: *dimension, nvars: *phase_dim, terms: ts };
                Ok(MatrixSymbol::polynomial(p).with_homogeneous(*homogeneous))
            }
            SymbolJson::Model { model, params } => model_library(model, params),
            SymbolJson::Grid { dimension, phase_dim, axes, values } => {
                if axes.len() != *phase_dim {
                    return Err(Error::Dimension("one axis per phase coordinate required".into()));
                }
                let vals = values.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
                Ok(MatrixSymbol::grid(GridSymbol::new(*dimension, axes.clone(), vals)?))
            }
        }
    }

    /// Serializable description of polynomial, model and grid symbols.
    pub fn describe(s: &MatrixSymbol) -> Option<SymbolJson> {
        match &s.kind {
            SymbolKind::Polynomial(p) => Some(SymbolJson::Polynomial {
                dimension: p.dim,
                phase_dim: p.nvars,
                terms: p
                    .terms
                    .iter()
                    .map(|t| TermJson { exponents: t.exps.clone(), coefficient: matrix_to_json(&t.coef) })
                    .collect(),
                homogeneous: s.homogeneous,
            }),
            SymbolKind::Model { name, params, .. } => {
                Some(SymbolJson::Model { model: name.clone(), params: params.clone() })
            }
            SymbolKind::Grid(g) => Some(SymbolJson::Grid {
                dimension: g.dim,
                phase_dim: g.axes.len(),
                axes: g.axes.clone(),
                values: g.values.iter().map(matrix_to_json).collect(),
            }),
            _ => None,
        }
    }
}

pub fn symbol_from_str(s: &str) -> Result<MatrixSymbol> {
    let j: SymbolJson = serde_json::from_str(s)?;
    j.build()
}

pub fn symbol_from_file(path: &std::path::Path) -> Result<MatrixSymbol> {
    symbol_from_str(&std::fs::read_to_string(path)?)
}

/// Points are either bare coordinate arrays or `{"coords": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointJson {
    Bare(Vec<f64>),
    Wrapped { coords: Vec<f64> },
}

impl PointJson {
    pub fn point(&self) -> Result<PhasePoint> {
        match self {
            PointJson::Bare(c) | PointJson::Wrapped { coords: c } => PhasePoint::new(c.clone()),
        }
    }
}
