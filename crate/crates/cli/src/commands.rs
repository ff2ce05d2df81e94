//! One function per subcommand. Each returns a JSON summary and whether the
//! verdict is negative.

use serde::Serialize;
use serde_json::{json, Value};

use subsym_core::finite_type::{finite_type_verdict, FiniteTypeConfig, FiniteTypeVerdict};
use subsym_core::fit::logspace;
use subsym_core::linalg;
use subsym_core::principal::{is_principal_type, SearchParams, Verdict};
use subsym_core::quasisym::sample_patch;
use subsym_core::semiclassical::{
    scaling_sweep, Boundary, LineModel, ScalingReport, ScalingVerdict, SubexModel, SweepModel,
};
use subsym_core::spectral::spectral_projection;
use subsym_core::sublevel::{fit_sublevel_exponent, DEFAULT_GRID};
use subsym_core::symbol::io::{matrix_from_json, MatrixJson};
use subsym_core::symbol::models::MODELS;
use subsym_core::symbol::{LinePart, SymbolLine};
use subsym_core::symmetrizer::{find_symmetrizer, SymmetrizerParams};
use subsym_core::{Error, HypersurfaceChart, MatrixSymbol, PhasePoint, Result, TangentDirection};

use crate::config::{parse_logrange, parse_window, Command, JobConfig};
use crate::output::{num, Artifacts};

pub struct Outcome {
    pub summary: Value,
    /// Negative verdict (exit 2).
    pub negative: bool,
    /// Some check failed (exit 1); the summary is still printed.
    pub failed: bool,
    /// Printed instead of the JSON summary.
    pub text: Option<String>,
}

impl Outcome {
    pub fn new(summary: Value, negative: bool) -> Self {
        Self { summary, negative, failed: false, text: None }
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

pub fn run(job: &JobConfig, out: &mut Artifacts) -> Result<Outcome> {
    match job.command.ok_or_else(|| Error::Input("no command given".into()))? {
        Command::AnalyzeSymbol => analyze_symbol(job, out),
        Command::FindSymmetrizer => find_symmetrizer_cmd(job, out),
        Command::Sublevel => sublevel(job, out),
        Command::FiniteType => finite_type(job, out),
        Command::SpectralProjection => spectral(job, out),
        Command::VerifyEstimate => verify_estimate(job, out),
        Command::ListModels => list_models(out),
        Command::RunPaperSuite => crate::suite::run_paper_suite(job, out),
    }
}

/// Configured point; homogeneous models default to `ξ = 1` in the last slot.
fn point(job: &JobConfig, p: &MatrixSymbol) -> Result<PhasePoint> {
    if job.point.is_none() && p.homogeneous && p.phase_dim >= 4 {
        let mut c = vec![0.0; p.phase_dim];
        c[p.phase_dim - 1] = 1.0;
        return PhasePoint::new(c);
    }
    job.point_for(p.phase_dim)
}

fn direction(job: &JobConfig, pd: usize) -> Result<TangentDirection> {
    match &job.direction {
        Some(d) if d.len() == pd => {
            TangentDirection::unit(d.clone()).ok_or_else(|| Error::Input("direction must be nonzero".into()))
        }
        Some(d) => Err(Error::Dimension(format!("direction has {} components, symbol needs {pd}", d.len()))),
        None => Ok(TangentDirection::axis(pd, 0)),
    }
}

fn analyze_symbol(job: &JobConfig, out: &mut Artifacts) -> Result<Outcome> {
    let p = job.symbol()?;
    let w = point(job, &p)?;
    let search = SearchParams { seed: job.seed(), ..Default::default() };
    let v = is_principal_type(&p, &w, &search)?;
    let value = p.eval(&w)?;
    let summary = json!({
        "command": "analyze-symbol",
        "point": w.coords,
        "dimension": p.dim,
        "rank": linalg::numerical_rank(&value, linalg::RANK_TOL),
        "principal_type": to_value(&v)?,
    });
    out.json("analyze-symbol.json", &summary)?;
    Ok(Outcome::new(summary, v.verdict == Verdict::No))
}

fn find_symmetrizer_cmd(job: &JobConfig, out: &mut Artifacts) -> Result<Outcome> {
    let p = job.symbol()?;
    let w = point(job, &p)?;
    let v = direction(job, p.phase_dim)?;
    let axes = job.axes.clone().unwrap_or_else(|| (0..p.phase_dim).collect());
    if axes.iter().any(|&a| a >= p.phase_dim) {
        return Err(Error::Dimension("patch axis out of range".into()));
    }
    let samples = sample_patch(&w, job.radius.unwrap_or(0.2), job.samples.unwrap_or(120), &axes, job.seed());
    let r = find_symmetrizer(&p, &samples, &v, &SymmetrizerParams::default())?;
    let (m1, m2) = r.min_margins();
    let summary = json!({
        "command": "find-symmetrizer",
        "feasible": r.feasible,
        "min_margins": [m1, m2],
        "result": to_value(&r)?,
    });
    out.json("symmetrizer.json", &summary)?;
    Ok(Outcome::new(summary, !r.feasible))
}

fn line_part(job: &JobConfig, p: &MatrixSymbol) -> Result<LinePart> {
    match job.part.as_deref().unwrap_or("auto") {
        "full" => Ok(LinePart::Full),
        "re" => Ok(LinePart::Re),
        "im" => Ok(LinePart::Im),
        "auto" => Ok(match p.model_name() {
            Some("ex1") | Some("ex2") => LinePart::Full,
            _ => LinePart::Im,
        }),
        other => Err(Error::Input(format!("part must be full, re, im or auto, got `{other}`"))),
    }
}

fn sublevel(job: &JobConfig, out: &mut Artifacts) -> Result<Outcome> {
    let p = job.symbol()?;
    let w = point(job, &p)?;
    let chart = HypersurfaceChart::standard(p.phase_dim);
    let curve = SymbolLine { symbol: &p, base: w.coords.clone(), index: chart.t_index, part: line_part(job, &p)? };
    let (lo, hi, n) = parse_logrange(job.deltas.as_deref().unwrap_or("1e-7:1e-2:16"))?;
    let window = parse_window(job.window.as_deref().unwrap_or("-1:1"))?;
    let r = fit_sublevel_exponent(&curve, window, (lo, hi), n, job.grid.unwrap_or(DEFAULT_GRID))?;
    let rows: Vec<Vec<String>> = r.delta_grid.iter().zip(&r.measures).map(|(d, m)| vec![num(*d), num(*m)]).collect();
    out.csv("sublevel.csv", &["delta", "measure"], &rows)?;
    let summary = json!({ "command": "sublevel", "report": to_value(&r)? });
    out.json("sublevel.json", &summary)?;
    Ok(Outcome::new(summary, false))
}

fn finite_type(job: &JobConfig, out: &mut Artifacts) -> Result<Outcome> {
    let p = job.symbol()?;
    let w = point(job, &p)?;
    let chart = HypersurfaceChart::standard(p.phase_dim);
    let mut cfg = FiniteTypeConfig { seed: job.seed(), ..Default::default() };
    if let Some(l) = job.lattice {
        cfg.lattice = l;
    }
    let r = finite_type_verdict(&p, &w, &chart, &cfg)?;
    let summary = json!({ "command": "finite-type", "verdict": r.verdict.as_str(), "report": to_value(&r)? });
    out.json("finite-type.json", &summary)?;
    Ok(Outcome::new(summary, r.verdict == FiniteTypeVerdict::NotFiniteType))
}

fn spectral(job: &JobConfig, out: &mut Artifacts) -> Result<Outcome> {
    let q = match &job.matrix {
        Some(path) => {
            let m: MatrixJson = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            matrix_from_json(&m)?
        }
        None => {
            let p = job.symbol()?;
            p.eval(&point(job, &p)?)?
        }
    };
    let r = spectral_projection(&q, job.epsilon, job.nodes)?;
    let summary = json!({ "command": "spectral-projection", "projection": to_value(&r)? });
    out.json("spectral-projection.json", &summary)?;
    Ok(Outcome::new(summary, false))
}

/// Predicted loss `γ` for the library's scaling models.
pub fn predicted_loss(name: &str, params: &Value) -> Option<f64> {
    let f = if name == "simplex" { params.get("f").and_then(Value::as_str).unwrap_or("ex2") } else { name };
    match f {
        "scalar" => {
            let k = params.get("k").and_then(Value::as_f64).unwrap_or(2.0);
            Some(k / (k + 1.0))
        }
        "ex2" => Some(6.0 / 7.0),
        "t2" => Some(2.0 / 3.0),
        "id" | "identity" => Some(0.0),
        _ => None,
    }
}

pub fn sweep_model(job: &JobConfig) -> Result<(Box<dyn SweepModel>, Option<f64>, &'static str)> {
    if job.model_name() == Some("subex") {
        let alpha = job.params.get("alpha").and_then(Value::as_f64);
        let beta = job.params.get("beta").and_then(Value::as_f64);
        let (Some(alpha), Some(beta)) = (alpha, beta) else {
            return Err(Error::InvalidParams("subex requires real `alpha` and `beta`".into()));
        };
        let m = SubexModel::new(alpha, beta);
        let pred = m.predicted();
        return Ok((Box::new(m), Some(pred), "1e-3:1e-1:8"));
    }
    let mut m = match (&job.model, &job.symbol) {
        (Some(name), None) => LineModel::named(name, &job.params)?,
        _ => {
            let p = job.symbol()?;
            let w = point(job, &p)?;
            LineModel::new(p, w)
        }
    };
    if let Some(b) = job.boundary.as_deref() {
        m.boundary = match b {
            "dirichlet" => Boundary::Dirichlet,
            "periodic" => Boundary::Periodic,
            _ => return Err(Error::Input(format!("boundary must be dirichlet or periodic, got `{b}`"))),
        };
    }
    if let Some(o) = job.order {
        m.order = o;
    }
    if let Some(w) = job.window.as_deref() {
        m.window = parse_window(w)?;
    }
    let pred = job.model_name().and_then(|n| predicted_loss(n, &job.params));
    Ok((Box::new(m), pred, "1e-4:1e-1:8"))
}

pub fn scaling_rows(r: &ScalingReport) -> Vec<Vec<String>> {
    (0..r.h_grid.len())
        .map(|i| vec![num(r.h_grid[i]), r.n_t[i].to_string(), r.sizes[i].to_string(), num(r.sigma_mins[i])])
        .collect()
}

fn verify_estimate(job: &JobConfig, out: &mut Artifacts) -> Result<Outcome> {
    let (model, pred, default_h) = sweep_model(job)?;
    let (lo, hi, n) = parse_logrange(job.h.as_deref().unwrap_or(default_h))?;
    let r = scaling_sweep(model.as_ref(), &logspace(lo, hi, n), pred)?;
    out.csv("scaling.csv", &["h", "n_t", "size", "sigma_min"], &scaling_rows(&r))?;
    let mut dat = String::from("# h sigma_min\n");
    for (h, s) in r.h_grid.iter().zip(&r.sigma_mins) {
        dat.push_str(&format!("{h:e} {s:e}\n"));
    }
    out.text("scaling.dat", &dat)?;
    let summary = json!({ "command": "verify-estimate", "report": to_value(&r)? });
    out.json("scaling.json", &summary)?;
    Ok(Outcome::new(summary, r.subelliptic_verdict == ScalingVerdict::NoGain))
}

fn list_models(out: &mut Artifacts) -> Result<Outcome> {
    let list: Vec<Value> = MODELS
        .iter()
        .map(|m| json!({ "name": m.name, "phase_dim": m.phase_dim, "params": m.params, "description": m.description }))
        .collect();
    let summary = json!({ "command": "list-models", "models": list });
    out.json("models.json", &summary)?;
    Ok(Outcome::new(summary, false))
}
