//! Job configuration: JSON file, overlaid by command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use subsym_core::symbol::io::symbol_from_file;
use subsym_core::symbol::models::model_library;
use subsym_core::{Error, MatrixSymbol, PhasePoint, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    AnalyzeSymbol,
    FindSymmetrizer,
    Sublevel,
    FiniteType,
    SpectralProjection,
    VerifyEstimate,
    ListModels,
    RunPaperSuite,
}

/// Everything a run depends on. Identical configs give identical artifacts.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    #[serde(default)]
    pub command: Option<Command>,
    /// Named model from the library.
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub params: Value,
    /// Symbol definition file (JSON); alternative to `model`.
    #[serde(default)]
    pub symbol: Option<PathBuf>,
    /// Matrix file (JSON rows) for `spectral-projection`.
    #[serde(default)]
    pub matrix: Option<PathBuf>,
    #[serde(default)]
    pub point: Option<Vec<f64>>,
    /// Vector field `V` (defaults to the first coordinate axis).
    #[serde(default)]
    pub direction: Option<Vec<f64>>,
    /// Coordinates spanned by the sample patch (default: all).
    #[serde(default)]
    pub axes: Option<Vec<usize>>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub samples: Option<usize>,
    /// `lo:hi:n`, log-spaced.
    #[serde(default)]
    pub deltas: Option<String>,
    /// `a:b`.
    #[serde(default)]
    pub window: Option<String>,
    #[serde(default)]
    pub grid: Option<usize>,
    /// `full`, `re`, `im` or `auto`.
    #[serde(default)]
    pub part: Option<String>,
    /// `lo:hi:n`, log-spaced.
    #[serde(default)]
    pub h: Option<String>,
    #[serde(default)]
    pub boundary: Option<String>,
    #[serde(default)]
    pub order: Option<usize>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub nodes: Option<usize>,
    #[serde(default)]
    pub lattice: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub only: Option<String>,
}

pub const DEFAULT_SEED: u64 = 0x5eed;

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f; } )*
    };
}

impl JobConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Input(format!("config {}: {e}", path.display())))
    }

    /// Fields set in `top` win.
    pub fn overlay(mut self, top: JobConfig) -> Self {
        overlay!(self, top; command, model, symbol, matrix, point, direction, axes, radius, samples, deltas,
            window, grid, part, h, boundary, order, epsilon, nodes, lattice, seed, jobs, output, only);
        if !top.params.is_null() {
            self.params = top.params;
        }
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn model_name(&self) -> Option<&str> {
        self.model.as_deref()
    }

    pub fn symbol(&self) -> Result<MatrixSymbol> {
        match (&self.model, &self.symbol) {
            (Some(m), None) => model_library(m, &self.params),
            (None, Some(p)) => symbol_from_file(p),
            (Some(_), Some(_)) => Err(Error::Input("give either a model or a symbol file, not both".into())),
            (None, None) => Err(Error::Input("a model or a symbol file is required".into())),
        }
    }

    /// The configured point, or the origin of the symbol's phase space.
    pub fn point_for(&self, phase_dim: usize) -> Result<PhasePoint> {
        match &self.point {
            Some(c) => {
                if c.len() != phase_dim {
                    return Err(Error::Dimension(format!("point has {} coordinates, symbol needs {phase_dim}", c.len())));
                }
                PhasePoint::new(c.clone())
            }
            None => Ok(PhasePoint::origin(phase_dim)),
        }
    }
}

/// `lo:hi:n` → `n` log-spaced values.
pub fn parse_logrange(s: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Input(format!("expected lo:hi:n, got `{s}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(Error::Input(format!("range `{s}` needs 0 < lo < hi and n ≥ 2")));
    }
    Ok((lo, hi, n))
}

/// `a:b` → `(a, b)`.
pub fn parse_window(s: &str) -> Result<(f64, f64)> {
    let bad = || Error::Input(format!("expected a:b, got `{s}`"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(a < b) {
        return Err(bad());
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_logrange("1e-4:1e-1:8").unwrap(), (1e-4, 1e-1, 8));
        assert!(parse_logrange("1e-1:1e-4:8").is_err());
        assert!(parse_logrange("1:2").is_err());
        assert_eq!(parse_window("-1:1").unwrap(), (-1.0, 1.0));
        assert!(parse_window("1:-1").is_err());
    }

    #[test]
    fn overlay_prefers_flags() {
        let base: JobConfig = serde_json::from_str(r#"{"model": "ex2", "seed": 3, "deltas": "1e-6:1e-2:8"}"#).unwrap();
        let top = JobConfig { seed: Some(9), ..Default::default() };
        let j = base.overlay(top);
        assert_eq!(j.seed(), 9);
        assert_eq!(j.model.as_deref(), Some("ex2"));
        assert_eq!(j.deltas.as_deref(), Some("1e-6:1e-2:8"));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<JobConfig>(r#"{"modle": "ex2"}"#).is_err());
    }
}
