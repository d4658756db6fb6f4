use std::fs;
use std::path::Path;

use magweyl::fields::MagneticField;
use magweyl::grid::PhaseGrid;
use magweyl::io::{operator_bytes, sidecar, symbol_bytes};
use magweyl::moyal::{commutator_symbol, expansion, moyal_oracle, moyal_product, parametrix};
use magweyl::quantize::{op_minimal, Quantizer, Scheme};
use magweyl::spectral::{fractional_power, interior_operator_norm, principal_symbol_check, spectrum};
use magweyl::symbols::{poisson_b, sample, Symbol, SymbolField};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{gauge_function, ExperimentConfig};
use crate::CliError;

pub fn write_json(out: &Path, name: &str, body: Value) -> Result<Value, CliError> {
    fs::create_dir_all(out)?;
    let v = sidecar(body);
    fs::write(out.join(name), serde_json::to_vec_pretty(&v).expect("json values serialize"))?;
    Ok(v)
}

pub fn write_bytes(out: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    fs::create_dir_all(out)?;
    fs::write(out.join(name), bytes)?;
    Ok(())
}

fn quantize_with(cfg: &ExperimentConfig, p: &Symbol, grid: &PhaseGrid) -> Result<magweyl::quantize::OperatorMatrix, CliError> {
    let a = cfg.potential()?;
    Ok(match cfg.scheme()? {
        Scheme::Magnetic => Quantizer::new(grid, &a)?.magnetic(&sample(p, grid)?)?,
        Scheme::Minimal => op_minimal(p, grid, &a)?,
        Scheme::Weyl => Quantizer::weyl(grid).magnetic(&sample(p, grid)?)?,
    })
}

pub fn quantize(cfg: &ExperimentConfig, out: &Path) -> Result<Value, CliError> {
    let grid = cfg.phase_grid()?;
    let p = cfg.symbol_f()?;
    let m = quantize_with(cfg, &p, &grid)?;
    write_bytes(out, "operator.mwo", &operator_bytes(&m))?;
    write_json(
        out,
        "quantize.json",
        json!({
            "symbol": p.label(),
            "scheme": m.scheme().to_string(),
            "potential": m.potential(),
            "grid": grid,
            "hermiticity_defect": m.hermiticity_defect(),
            "frobenius": m.frobenius(),
            "interior_norm": interior_operator_norm(&m),
        }),
    )
}

/// Interior nodes where `|f|` reaches a tenth of its maximum, shuffled.
fn oracle_points(p: &SymbolField, count: usize, seed: u64) -> Vec<(usize, usize)> {
    let grid = p.grid();
    let n = grid.len();
    let peak = p.max_abs();
    let mut cand: Vec<(usize, usize)> = grid
        .interior_indices()
        .into_iter()
        .flat_map(|i| (0..n).map(move |k| (i, k)))
        .filter(|&(i, k)| p.value(i, k).norm() >= 0.1 * peak)
        .collect();
    cand.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    cand.truncate(count);
    cand
}

pub struct OracleTable {
    pub rows: Vec<Value>,
    pub max_relative: f64,
}

pub fn oracle_table(
    f: &Symbol,
    g: &Symbol,
    b: &MagneticField,
    product: &SymbolField,
    count: usize,
    seed: u64,
) -> Result<OracleTable, CliError> {
    let grid = product.grid();
    let dim = grid.dim();
    let picks = oracle_points(product, count, seed);
    let pts: Vec<(Vec<f64>, Vec<f64>)> = picks
        .iter()
        .map(|&(i, k)| (grid.x_point(i)[..dim].to_vec(), grid.xi_point(k)[..dim].to_vec()))
        .collect();
    let want = moyal_oracle(f, g, b, &pts)?;
    let scale = want.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut max_relative: f64 = 0.0;
    let rows = picks
        .iter()
        .zip(&pts)
        .zip(&want)
        .map(|((&(i, k), (x, xi)), w)| {
            let got = product.value(i, k);
            let rel = (got - w).norm() / scale;
            max_relative = max_relative.max(rel);
            json!({"x": x, "xi": xi, "product": [got.re, got.im], "oracle": [w.re, w.im], "relative_error": rel})
        })
        .collect();
    Ok(OracleTable { rows, max_relative })
}

pub fn compose(cfg: &ExperimentConfig, out: &Path) -> Result<Value, CliError> {
    let grid = cfg.phase_grid()?;
    let (f, g) = (cfg.symbol_f()?, cfg.symbol_g()?);
    let a = cfg.potential()?;
    let b = cfg.field_model()?;
    let product = moyal_product(&sample(&f, &grid)?, &sample(&g, &grid)?, &a)?;
    write_bytes(out, "product.mwc", &symbol_bytes(&product))?;
    let tol = cfg.options.tolerance.unwrap_or(1e-3);
    let oracle = if f.envelope().is_some() && g.envelope().is_some() {
        let t = oracle_table(&f, &g, &b, &product, cfg.options.points, cfg.seed)?;
        json!({"rows": t.rows, "max_relative_error": t.max_relative, "tolerance": tol, "pass": t.max_relative <= tol})
    } else {
        json!({"skipped": "the oracle needs Gaussian envelopes on both symbols"})
    };
    write_json(
        out,
        "compose.json",
        json!({"f": f.label(), "g": g.label(), "field": b.label(), "grid": grid, "oracle": oracle}),
    )
}

pub fn expand(cfg: &ExperimentConfig, out: &Path) -> Result<Value, CliError> {
    let grid = cfg.phase_grid()?;
    let (f, g) = (cfg.symbol_f()?, cfg.symbol_g()?);
    let a = cfg.potential()?;
    let b = cfg.field_model()?;
    let series = expansion(&sample(&f, &grid)?, &sample(&g, &grid)?, &b, 2)?;
    for (j, t) in series.terms.iter().enumerate() {
        write_bytes(out, &format!("h{j}.mwc"), &symbol_bytes(t))?;
    }
    let mut rows = Vec::new();
    for eps in [1.0, 0.5, 0.25] {
        let (fe, ge) = (sample(&f.dilate(eps), &grid)?, sample(&g.dilate(eps), &grid)?);
        let product = moyal_product(&fe, &ge, &a)?;
        let s = expansion(&fe, &ge, &b, 2)?.sum()?;
        let bracket = poisson_b(&fe, &ge, &b)?.scale(Complex64::new(0.0, -1.0));
        let comm = commutator_symbol(&fe, &ge, &a)?;
        rows.push(json!({
            "epsilon": eps,
            "expansion_error": product.sub(&s)?.l2_norm(),
            "commutator_vs_bracket": comm.relative_l2_error(&bracket)?,
        }));
    }
    write_json(
        out,
        "expand.json",
        json!({"f": f.label(), "g": g.label(), "field": b.label(), "orders": series.orders, "dilation": rows}),
    )
}

pub fn parametrix_cmd(cfg: &ExperimentConfig, out: &Path) -> Result<Value, CliError> {
    let grid = cfg.phase_grid()?;
    let a = sample(&cfg.symbol_f()?, &grid)?;
    let b = cfg.field_model()?;
    let r = parametrix(&a, &b, cfg.options.cutoff, cfg.options.order)?;
    write_bytes(out, "parametrix.mwc", &symbol_bytes(&r.b))?;
    write_bytes(out, "residual.mwc", &symbol_bytes(&r.residual_field))?;
    write_json(
        out,
        "parametrix.json",
        json!({"symbol": cfg.symbols.f, "field": b.label(), "summary": r.summary()}),
    )
}

pub fn spectrum_cmd(cfg: &ExperimentConfig, out: &Path) -> Result<Value, CliError> {
    let grid = cfg.phase_grid()?;
    let p = cfg.symbol_f()?;
    let m = quantize_with(cfg, &p, &grid)?;
    let report = spectrum(&m, cfg.options.interior_only)?;
    let mut body = serde_json::to_value(&report).expect("report serializes");
    // x-independent symbols on the full flat box: compare with p(ξ_k)
    let field_free = cfg.field_model()?.is_zero();
    if field_free && !cfg.options.interior_only {
        let f = sample(&p, &grid)?;
        let n = grid.len();
        let x_free = (0..n).all(|i| (0..n).all(|k| f.value(i, k) == f.value(0, k)));
        if x_free {
            let mut want: Vec<f64> = (0..n).map(|k| f.value(0, k).re).collect();
            want.sort_by(f64::total_cmp);
            let dev = want
                .iter()
                .zip(&report.eigenvalues)
                .map(|(w, e)| (w - e).abs())
                .fold(0.0, f64::max);
            body["dual_lattice_deviation"] = json!(dev);
        }
    }
    // principal symbol of M^s, only meaningful for positive symbols
    let f = sample(&p, &grid)?;
    if f.values().iter().all(|v| v.im == 0.0 && v.re > 0.0) {
        let s = cfg.options.power;
        let shift = fractional_power(&m, s)?.shift;
        let dev = principal_symbol_check(&m, s, &f, &cfg.potential()?, 0.5 * grid.nyquist_radius())?;
        body["fractional_power"] = json!({"s": s, "shift": shift, "principal_symbol_deviation": dev});
    }
    if cfg.options.csv {
        let mut csv = String::from("index,eigenvalue\n");
        for (i, e) in report.eigenvalues.iter().enumerate() {
            csv.push_str(&format!("{i},{e:.17e}\n"));
        }
        write_bytes(out, "eigenvalues.csv", csv.as_bytes())?;
    }
    write_json(out, "spectrum.json", body)
}

pub fn gauge(cfg: &ExperimentConfig, out: &Path) -> Result<Value, CliError> {
    let grid = cfg.phase_grid()?;
    let a = cfg.potential()?;
    let q = Quantizer::new(&grid, &a)?;
    let f = sample(&cfg.symbol_f()?, &grid)?;
    let tol = cfg.options.tolerance.unwrap_or(1e-8);
    let mut rows = Vec::new();
    for name in &cfg.options.phi {
        let phi = gauge_function(name, grid.dim()).map_err(|e| CliError::Config(format!("`options.phi`: {e}")))?;
        let mag = q.gauge_covariance_residual(&f, &phi, Scheme::Magnetic)?;
        let min = q.gauge_covariance_residual(&f, &phi, Scheme::Minimal)?;
        rows.push(json!({"phi": name, "magnetic": mag, "minimal": min, "magnetic_within_tolerance": mag <= tol}));
    }
    write_json(
        out,
        "gauge.json",
        json!({"symbol": cfg.symbols.f, "potential": a.label(), "tolerance": tol, "rows": rows}),
    )
}
