//! Experiment configuration: TOML with dotted sections, or the same tree as JSON.

use std::path::{Path, PathBuf};

use magweyl::fields::{field_preset, transversal_gauge, MagneticField, Polynomial, ScalarPotential, VectorPotential};
use magweyl::grid::PhaseGrid;
use magweyl::quadrature::GaussLegendre;
use magweyl::quantize::Scheme;
use magweyl::symbols::{parse_symbol, Symbol};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub field: FieldConfig,
    #[serde(default)]
    pub symbols: SymbolConfig,
    #[serde(default)]
    pub options: Options,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(rename = "N")]
    pub points: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldConfig {
    pub preset: String,
    /// `transversal` or `landau`
    pub gauge: String,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            preset: "zero".into(),
            gauge: "transversal".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SymbolConfig {
    pub f: String,
    pub g: Option<String>,
}

impl Default for SymbolConfig {
    fn default() -> Self {
        SymbolConfig {
            f: "bracket:1".into(),
            g: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Options {
    pub scheme: String,
    /// parametrix cutoff radius R
    pub cutoff: f64,
    /// Neumann order J
    pub order: usize,
    /// fractional power s reported by `spectrum`
    pub power: f64,
    pub interior_only: bool,
    pub csv: bool,
    /// oracle sample points for `compose`
    pub points: usize,
    /// gauge functions for `gauge`: `quadratic`, `cubic`, `smooth`, optionally `:scale`
    pub phi: Vec<String>,
    /// overrides the reporting threshold of `compose` and `gauge`
    pub tolerance: Option<f64>,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            scheme: "magnetic".into(),
            cutoff: 1.1,
            order: 2,
            power: 0.5,
            interior_only: true,
            csv: false,
            points: 10,
            phi: vec!["quadratic".into(), "cubic".into(), "smooth".into()],
            tolerance: None,
        }
    }
}

fn bad(key: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("`{key}`: {reason}"))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
        let cfg: ExperimentConfig = if is_json {
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse_toml(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Desk-scale defaults: n = 2, N = 16, L = 8, constant B₁₂ = 0.5.
    pub fn desk() -> Self {
        ExperimentConfig {
            grid: GridConfig {
                n: 2,
                points: 16,
                half_width: 8.0,
            },
            field: FieldConfig {
                preset: "constant:0.5".into(),
                gauge: "transversal".into(),
            },
            symbols: SymbolConfig::default(),
            options: Options::default(),
            output: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let g = &self.grid;
        if !(1..=3).contains(&g.n) {
            return Err(bad("grid.n", format!("{} not in {{1, 2, 3}}", g.n)));
        }
        if !g.points.is_power_of_two() || !(8..=64).contains(&g.points) {
            return Err(bad("grid.N", format!("{} is not a power of two in [8, 64]", g.points)));
        }
        if !(g.half_width.is_finite() && g.half_width > 0.0) {
            return Err(bad("grid.L", format!("{} is not a positive length", g.half_width)));
        }
        self.field_model()?;
        self.potential()?;
        parse_symbol(&self.symbols.f, g.n).map_err(|e| bad("symbols.f", e))?;
        if let Some(s) = &self.symbols.g {
            parse_symbol(s, g.n).map_err(|e| bad("symbols.g", e))?;
        }
        self.scheme()?;
        let o = &self.options;
        if !(o.cutoff.is_finite() && o.cutoff > 0.0) {
            return Err(bad("options.cutoff", "must be positive"));
        }
        if o.order > 3 {
            return Err(bad("options.order", format!("{} > 3", o.order)));
        }
        if !(-1.0..=1.0).contains(&o.power) {
            return Err(bad("options.power", format!("{} not in [-1, 1]", o.power)));
        }
        if o.points == 0 || o.points > 16 {
            return Err(bad("options.points", format!("{} not in 1..=16", o.points)));
        }
        for p in &o.phi {
            gauge_function(p, g.n).map_err(|e| bad("options.phi", e))?;
        }
        if let Some(t) = o.tolerance {
            if !(t.is_finite() && t > 0.0) {
                return Err(bad("options.tolerance", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn phase_grid(&self) -> Result<PhaseGrid, CliError> {
        PhaseGrid::new(self.grid.n, self.grid.points, self.grid.half_width).map_err(|e| bad("grid", e))
    }

    pub fn field_model(&self) -> Result<MagneticField, CliError> {
        field_preset(&self.field.preset, self.grid.n).map_err(|e| bad("field.preset", e))
    }

    pub fn potential(&self) -> Result<VectorPotential, CliError> {
        let b = self.field_model()?;
        match self.field.gauge.as_str() {
            "transversal" => Ok(transversal_gauge(&b)),
            "landau" => Ok(landau_gauge(&b)),
            other => Err(bad("field.gauge", format!("unknown gauge `{other}` (transversal | landau)"))),
        }
    }

    pub fn symbol_f(&self) -> Result<Symbol, CliError> {
        parse_symbol(&self.symbols.f, self.grid.n).map_err(|e| bad("symbols.f", e))
    }

    pub fn symbol_g(&self) -> Result<Symbol, CliError> {
        let s = self
            .symbols
            .g
            .as_deref()
            .ok_or_else(|| bad("symbols.g", "required by this command"))?;
        parse_symbol(s, self.grid.n).map_err(|e| bad("symbols.g", e))
    }

    pub fn scheme(&self) -> Result<Scheme, CliError> {
        Scheme::parse(&self.options.scheme)
            .ok_or_else(|| bad("options.scheme", format!("unknown scheme `{}`", self.options.scheme)))
    }

    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.output.clone())
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

/// `A₁ = −∫₀^{x₂} B₁₂(x₁, t, …) dt`, other components zero. Only the 12
/// component of the field is used, which covers every planar preset.
pub fn landau_gauge(b: &MagneticField) -> VectorPotential {
    let dim = b.dim();
    if b.is_zero() || dim < 2 {
        return VectorPotential::zero(dim);
    }
    let field = b.clone();
    let rule = GaussLegendre::new(16);
    VectorPotential::new(dim, format!("landau[{}]", b.label()), move |x, out| {
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut y = x.to_vec();
        out[0] = -rule.integrate(0.0, x[1], |t| {
            y[1] = t;
            field.component(0, 1, &y)
        });
    })
}

/// Gauge functions for covariance tables.
pub fn gauge_function(spec: &str, dim: usize) -> Result<ScalarPotential, String> {
    let (name, scale) = match spec.split_once(':') {
        Some((n, s)) => (n.trim(), s.trim().parse::<f64>().map_err(|e| format!("`{s}`: {e}"))?),
        None => (spec.trim(), 1.0),
    };
    if !scale.is_finite() {
        return Err("non-finite scale".into());
    }
    let e = |axis: usize, p: u32| {
        let mut v = vec![0; dim];
        v[axis.min(dim - 1)] += p;
        v
    };
    let mono = |a: &[(usize, u32)]| {
        let mut v = vec![0; dim];
        for &(axis, p) in a {
            v[axis.min(dim - 1)] += p;
        }
        v
    };
    match name {
        "quadratic" => Ok(ScalarPotential::from_polynomial(Polynomial::new(
            dim,
            vec![(e(0, 2), 0.05 * scale), (mono(&[(0, 1), (1, 1)]), -0.03 * scale), (e(1, 2), 0.02 * scale)],
        ))),
        "cubic" => Ok(ScalarPotential::from_polynomial(Polynomial::new(
            dim,
            vec![(e(0, 3), 0.01 * scale), (mono(&[(0, 1), (1, 2)]), -0.02 * scale)],
        ))),
        "smooth" => {
            let last = (dim - 1).min(1);
            Ok(ScalarPotential::new(
                dim,
                spec.to_string(),
                move |x| 0.3 * scale * (0.4 * x[0]).sin() * (0.3 * x[last]).cos(),
                move |x, out| {
                    out.iter_mut().for_each(|o| *o = 0.0);
                    out[0] += 0.12 * scale * (0.4 * x[0]).cos() * (0.3 * x[last]).cos();
                    out[last] -= 0.09 * scale * (0.4 * x[0]).sin() * (0.3 * x[last]).sin();
                },
            ))
        }
        _ => Err(format!("unknown gauge function `{name}` (quadratic | cubic | smooth)")),
    }
}
