use serde_json::{json, Value};

use subsym_core::fit::logspace;
use subsym_core::linalg::{self, re};
use subsym_core::semiclassical::{
    dense_sigma_min, discretize_model, scaling_sweep, sigma_min, Boundary, LineModel, SubexModel, SweepModel,
};
use subsym_core::symbol::models::model_library;
use subsym_core::{MatrixSymbol, PhasePoint};

fn scalar() -> LineModel {
    LineModel::named("scalar", &json!({"k": 2})).unwrap()
}

#[test]
fn free_derivative_matches_dense_extrapolation() {
    // centered hD_t on n Dirichlet nodes has singular values h|cos(kπ/(n+1))|/dt
    let m = LineModel::named("zero", &Value::Null).unwrap();
    let h = 1e-2;
    let small = discretize_model(&m.symbol, &m.base, &m.chart, h, 256, m.window, Boundary::Dirichlet, 2).unwrap();
    let c_dense = dense_sigma_min(&small.blocks[0]) / h;
    let big = discretize_model(&m.symbol, &m.base, &m.chart, h, 2048, m.window, Boundary::Dirichlet, 2).unwrap();
    let c_big = sigma_min(&big).unwrap() / h;
    assert!((c_big / c_dense - 1.0).abs() < 1e-3, "{c_big} {c_dense}");
    let n1 = 2049.0;
    let exact = (std::f64::consts::PI / (2.0 * n1)).sin() * n1 / 4.0;
    assert!((c_big / exact - 1.0).abs() < 1e-8, "{c_big} {exact}");
}

#[test]
fn doubling_nt_changes_sigma_little() {
    let fixtures = [("scalar", json!({"k": 2})), ("ex2", Value::Null), ("ex1", Value::Null)];
    for (name, params) in fixtures {
        let m = LineModel::named(name, &params).unwrap();
        for h in [1e-3, 1e-2] {
            let n = m.n_t(h);
            let a = discretize_model(&m.symbol, &m.base, &m.chart, h, n, m.window, m.boundary, m.order).unwrap();
            let b = discretize_model(&m.symbol, &m.base, &m.chart, h, 2 * n, m.window, m.boundary, m.order).unwrap();
            let (sa, sb) = (sigma_min(&a).unwrap(), sigma_min(&b).unwrap());
            assert!((sa / sb - 1.0).abs() <= 0.02, "{name} h={h}: {sa} vs {sb}");
        }
    }
}

#[test]
fn subex_grid_refinement_is_stable() {
    let coarse = SubexModel { grid: Some((64, 96)), ..SubexModel::new(1.0, 2.0) };
    let fine = SubexModel { grid: Some((128, 192)), cap: 128 * 192, ..SubexModel::new(1.0, 2.0) };
    let h = 3e-2;
    let (a, b) = (sigma_min(&coarse.discretize(h).unwrap()).unwrap(), sigma_min(&fine.discretize(h).unwrap()).unwrap());
    assert!((a / b - 1.0).abs() < 0.05, "{a} {b}");
}

#[test]
fn dirichlet_and_periodic_agree_up_to_a_constant() {
    let hs = logspace(1e-4, 1e-1, 8);
    let d = scaling_sweep(&scalar(), &hs, None).unwrap();
    let p = scaling_sweep(&LineModel { boundary: Boundary::Periodic, ..scalar() }, &hs, None).unwrap();
    for (a, b) in d.sigma_mins.iter().zip(&p.sigma_mins) {
        let r = a / b;
        assert!((0.2..=5.0).contains(&r), "{r}");
    }
    assert!((d.gamma_hat - p.gamma_hat).abs() <= 0.02);
}

#[test]
fn fourth_order_stencil_gives_same_exponent() {
    let hs = logspace(1e-4, 1e-1, 8);
    let a = scaling_sweep(&scalar(), &hs, None).unwrap();
    let b = scaling_sweep(&LineModel { order: 4, ..scalar() }, &hs, None).unwrap();
    assert!((a.gamma_hat - b.gamma_hat).abs() <= 0.02);
}

#[test]
fn more_damping_does_not_worsen_gain() {
    let hs = logspace(1e-4, 1e-1, 8);
    let ex2 = model_library("simplex", &json!({"f": "ex2"})).unwrap();
    let t2 = model_library("simplex", &json!({"f": "t2"})).unwrap();
    let zero = model_library("simplex", &json!({"f": "zero"})).unwrap();
    // τ + i(F_ex2 + t²)|ξ|
    let damped = MatrixSymbol::sum(vec![ex2, t2, zero.scaled(re(-1.0))]);
    let base = PhasePoint::new(vec![0.0, 0.0, 0.0, 1.0]).unwrap();
    let g_ex2 = scaling_sweep(&LineModel::named("ex2", &Value::Null).unwrap(), &hs, None).unwrap().gamma_hat;
    let g_damped = scaling_sweep(&LineModel::new(damped, base), &hs, None).unwrap().gamma_hat;
    assert!(g_damped <= g_ex2 + 0.03, "{g_damped} {g_ex2}");
}

#[test]
fn sweep_rejects_short_grids_and_bad_h() {
    assert!(scaling_sweep(&scalar(), &logspace(1e-3, 1e-1, 5), None).is_err());
    let m = scalar();
    assert!(discretize_model(&m.symbol, &m.base, &m.chart, 0.0, 256, m.window, m.boundary, 2).is_err());
    assert!(discretize_model(&m.symbol, &m.base, &m.chart, 1e-2, 128, m.window, m.boundary, 2).is_err());
    assert!(discretize_model(&m.symbol, &m.base, &m.chart, 1e-2, 256, m.window, m.boundary, 3).is_err());
}

#[test]
fn elliptic_sigma_is_bounded_below() {
    let r = scaling_sweep(&LineModel::named("id", &Value::Null).unwrap(), &logspace(1e-4, 1e-1, 8), None).unwrap();
    let lo = r.sigma_mins.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(lo >= 0.99, "{lo}");
    let _ = linalg::I;
}
