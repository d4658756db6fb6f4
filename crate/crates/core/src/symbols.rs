//! Phase-space symbols: closures, sampled fields, derivatives, brackets.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{MagneticField, MAX_DIM};
use crate::grid::PhaseGrid;

type SymbolFn = dyn Fn(&[f64], &[f64]) -> Complex64 + Send + Sync;

/// Advisory `S^m_{ρ,δ}` tag.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolClass {
    pub m: f64,
    pub rho: f64,
    pub delta: f64,
}

impl SymbolClass {
    pub fn new(m: f64, rho: f64, delta: f64) -> Self {
        SymbolClass { m, rho, delta }
    }

    /// Order of the j-th term in the expansion of a product.
    pub fn product_order(&self, other: &SymbolClass, j: usize) -> f64 {
        self.m + other.m - j as f64 * (self.rho - self.delta)
    }
}

/// Gaussian decay profile: `|f| ≲ exp(−|x−c|²/2σ² − |ξ−κ|²/2τ²)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub x_center: Vec<f64>,
    pub x_width: f64,
    pub xi_center: Vec<f64>,
    pub xi_width: f64,
}

/// A symbol as an analytic closure `(x, ξ) ↦ f(x, ξ)`.
#[derive(Clone)]
pub struct Symbol {
    dim: usize,
    func: Arc<SymbolFn>,
    envelope: Option<Envelope>,
    class: Option<SymbolClass>,
    label: String,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Symbol")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("envelope", &self.envelope)
            .field("class", &self.class)
            .finish()
    }
}

impl Symbol {
    pub fn new<F>(dim: usize, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> Complex64 + Send + Sync + 'static,
    {
        Symbol {
            dim,
            func: Arc::new(f),
            envelope: None,
            class: None,
            label: label.into(),
        }
    }

    pub fn real<F>(dim: usize, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        Symbol::new(dim, label, move |x, xi| Complex64::new(f(x, xi), 0.0))
    }

    pub fn constant(dim: usize, c: Complex64) -> Self {
        Symbol::new(dim, format!("{c}"), move |_, _| c).with_class(SymbolClass::new(0.0, 1.0, 0.0))
    }

    pub fn with_envelope(mut self, env: Envelope) -> Self {
        self.envelope = Some(env);
        self
    }

    pub fn with_class(mut self, class: SymbolClass) -> Self {
        self.class = Some(class);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn envelope(&self) -> Option<&Envelope> {
        self.envelope.as_ref()
    }

    pub fn class(&self) -> Option<SymbolClass> {
        self.class
    }

    #[inline]
    pub fn eval(&self, x: &[f64], xi: &[f64]) -> Complex64 {
        (self.func)(x, xi)
    }

    pub fn scale(&self, c: Complex64) -> Symbol {
        let f = self.func.clone();
        Symbol {
            dim: self.dim,
            func: Arc::new(move |x, xi| c * f(x, xi)),
            envelope: self.envelope.clone(),
            class: self.class,
            label: format!("({c})*{}", self.label),
        }
    }

    pub fn conj(&self) -> Symbol {
        let f = self.func.clone();
        Symbol {
            dim: self.dim,
            func: Arc::new(move |x, xi| f(x, xi).conj()),
            envelope: self.envelope.clone(),
            class: self.class,
            label: format!("conj({})", self.label),
        }
    }

    pub fn zip(&self, other: &Symbol, op: BinOp) -> Symbol {
        let (f, g) = (self.func.clone(), other.func.clone());
        let func: Arc<SymbolFn> = match op {
            BinOp::Add => Arc::new(move |x, xi| f(x, xi) + g(x, xi)),
            BinOp::Sub => Arc::new(move |x, xi| f(x, xi) - g(x, xi)),
            BinOp::Mul => Arc::new(move |x, xi| f(x, xi) * g(x, xi)),
        };
        let class = match (op, self.class, other.class) {
            (BinOp::Mul, Some(a), Some(b)) => Some(SymbolClass::new(
                a.m + b.m,
                a.rho.min(b.rho),
                a.delta.max(b.delta),
            )),
            (_, Some(a), Some(b)) => Some(SymbolClass::new(
                a.m.max(b.m),
                a.rho.min(b.rho),
                a.delta.max(b.delta),
            )),
            _ => None,
        };
        Symbol {
            dim: self.dim,
            func,
            envelope: None,
            class,
            label: format!("({} {} {})", self.label, op.as_str(), other.label),
        }
    }

    /// `f_ε(X) = f(c + ε(X − c))` about the envelope center (origin if none).
    pub fn dilate(&self, eps: f64) -> Symbol {
        let dim = self.dim;
        let (cx, ck) = match &self.envelope {
            Some(e) => (e.x_center.clone(), e.xi_center.clone()),
            None => (vec![0.0; dim], vec![0.0; dim]),
        };
        let f = self.func.clone();
        let (cx2, ck2) = (cx.clone(), ck.clone());
        let func = move |x: &[f64], xi: &[f64]| {
            let mut y = [0.0; MAX_DIM];
            let mut k = [0.0; MAX_DIM];
            for a in 0..dim {
                y[a] = cx2[a] + eps * (x[a] - cx2[a]);
                k[a] = ck2[a] + eps * (xi[a] - ck2[a]);
            }
            f(&y[..dim], &k[..dim])
        };
        Symbol {
            dim,
            func: Arc::new(func),
            envelope: self.envelope.as_ref().map(|e| Envelope {
                x_center: cx,
                x_width: e.x_width / eps,
                xi_center: ck,
                xi_width: e.xi_width / eps,
            }),
            class: self.class,
            label: format!("dilate({}, {eps})", self.label),
        }
    }

    /// Closure derivative `∂^order` along `axis` by the centered 4th-order
    /// stencil with step `step`, evaluated off-lattice.
    pub fn partial(&self, axis: Axis, order: usize, step: f64) -> Result<Symbol> {
        if order > 4 {
            return Err(Error::DerivativeOrder(order));
        }
        if order == 0 {
            return Ok(self.clone());
        }
        let r = centered_radius(order);
        let offsets: Vec<f64> = (-(r as i64)..=r as i64).map(|o| o as f64).collect();
        let w = fornberg(0.0, &offsets, order);
        let scale = step.powi(-(order as i32));
        let taps: Vec<(f64, f64)> = offsets
            .iter()
            .zip(&w)
            .filter(|(_, &c)| c != 0.0)
            .map(|(&o, &c)| (o * step, c * scale))
            .collect();
        let f = self.func.clone();
        let dim = self.dim;
        let func = move |x: &[f64], xi: &[f64]| {
            let mut y = [0.0; MAX_DIM];
            let mut k = [0.0; MAX_DIM];
            y[..dim].copy_from_slice(&x[..dim]);
            k[..dim].copy_from_slice(&xi[..dim]);
            let mut acc = Complex64::new(0.0, 0.0);
            for &(off, c) in &taps {
                match axis {
                    Axis::X(j) => y[j] = x[j] + off,
                    Axis::Xi(j) => k[j] = xi[j] + off,
                }
                acc += c * f(&y[..dim], &k[..dim]);
            }
            acc
        };
        let class = self.class.map(|c| match axis {
            Axis::X(_) => SymbolClass::new(c.m + order as f64 * c.delta, c.rho, c.delta),
            Axis::Xi(_) => SymbolClass::new(c.m - order as f64 * c.rho, c.rho, c.delta),
        });
        Ok(Symbol {
            dim,
            func: Arc::new(func),
            envelope: None,
            class,
            label: format!("d{}^{order}({})", axis, self.label),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
}

impl BinOp {
    fn as_str(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
        }
    }

    fn apply(self, a: Complex64, b: Complex64) -> Complex64 {
        match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
        }
    }
}

/// Differentiation axis: position `x_j` or momentum `ξ_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X(usize),
    Xi(usize),
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::X(j) => write!(f, "x{}", j + 1),
            Axis::Xi(j) => write!(f, "xi{}", j + 1),
        }
    }
}

fn centered_radius(order: usize) -> usize {
    // 4th-order accuracy: 5 points for orders 1–2, 7 for 3–4.
    (order + 1) / 2 + 1
}

/// Fornberg weights for the `order`-th derivative at `z` from nodes `xs`.
pub fn fornberg(z: f64, xs: &[f64], order: usize) -> Vec<f64> {
    let n = xs.len();
    let m = order;
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Parses `name[:p1,p2,...]` into a builtin symbol.
///
/// * `one`, `kinetic` (|ξ|²), `bracket:m` (⟨ξ⟩^m)
/// * `xi:j`, `x:j` (1-based axis)
/// * `monomial:a1,..,an` (ξ^α)
/// * `cubic:j,k,l` (ξ_jξ_kξ_l, 1-based)
/// * `gaussian:cx1..cxn,σ,κ1..κn,τ`
pub fn parse_symbol(spec: &str, dim: usize) -> Result<Symbol> {
    let (name, args) = match spec.split_once(':') {
        Some((n, a)) => (n.trim(), a.trim()),
        None => (spec.trim(), ""),
    };
    let params: Vec<f64> = if args.is_empty() {
        vec![]
    } else {
        args.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::bad_params(name, format!("`{s}`: {e}")))
            })
            .collect::<Result<_>>()?
    };
    builtin(name, &params, dim)
}

pub fn builtin(name: &str, params: &[f64], dim: usize) -> Result<Symbol> {
    let want = |k: usize| -> Result<()> {
        if params.len() != k {
            Err(Error::bad_params(
                name,
                format!("expected {k} parameters, got {}", params.len()),
            ))
        } else {
            Ok(())
        }
    };
    let axis = |p: f64| -> Result<usize> {
        if p.fract() != 0.0 || p < 1.0 || p as usize > dim {
            Err(Error::bad_params(name, format!("axis {p} not in 1..={dim}")))
        } else {
            Ok(p as usize - 1)
        }
    };
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::bad_params(name, "non-finite parameter"));
    }
    let poly = |m: f64| SymbolClass::new(m, 1.0, 0.0);
    match name {
        "one" => {
            want(0)?;
            Ok(Symbol::constant(dim, Complex64::new(1.0, 0.0)).with_label("one"))
        }
        "kinetic" => {
            want(0)?;
            Ok(kinetic(dim))
        }
        "bracket" => {
            want(1)?;
            Ok(bracket(dim, params[0]))
        }
        "xi" => {
            want(1)?;
            let j = axis(params[0])?;
            Ok(Symbol::real(dim, format!("xi{}", j + 1), move |_, xi| xi[j]).with_class(poly(1.0)))
        }
        "x" => {
            want(1)?;
            let j = axis(params[0])?;
            Ok(Symbol::real(dim, format!("x{}", j + 1), move |x, _| x[j])
                .with_class(SymbolClass::new(0.0, 1.0, 1.0)))
        }
        "monomial" => {
            want(dim)?;
            let alpha: Vec<i32> = params
                .iter()
                .map(|&p| {
                    if p.fract() == 0.0 && p >= 0.0 {
                        Ok(p as i32)
                    } else {
                        Err(Error::bad_params(name, format!("exponent {p}")))
                    }
                })
                .collect::<Result<_>>()?;
            let deg: i32 = alpha.iter().sum();
            Ok(Symbol::real(dim, format!("xi^{alpha:?}"), move |_, xi| {
                alpha.iter().zip(xi).map(|(&a, &k)| k.powi(a)).product()
            })
            .with_class(poly(deg as f64)))
        }
        "cubic" => {
            want(3)?;
            let (j, k, l) = (axis(params[0])?, axis(params[1])?, axis(params[2])?);
            Ok(cubic(dim, j, k, l))
        }
        "gaussian" => {
            want(2 * dim + 2)?;
            let cx = params[..dim].to_vec();
            let sx = params[dim];
            let ck = params[dim + 1..2 * dim + 1].to_vec();
            let sk = params[2 * dim + 1];
            if sx <= 0.0 || sk <= 0.0 {
                return Err(Error::bad_params(name, "widths must be positive"));
            }
            Ok(gaussian(&cx, sx, &ck, sk))
        }
        _ => Err(Error::UnknownSymbol(name.to_string())),
    }
}

/// `|ξ|²`
pub fn kinetic(dim: usize) -> Symbol {
    Symbol::real(dim, "kinetic", |_, xi| xi.iter().map(|k| k * k).sum())
        .with_class(SymbolClass::new(2.0, 1.0, 0.0))
}

/// `⟨ξ⟩^m = (1 + |ξ|²)^{m/2}`
pub fn bracket(dim: usize, m: f64) -> Symbol {
    let label = format!("bracket({m})");
    let f: Box<dyn Fn(f64) -> f64 + Send + Sync> = if m == 1.0 {
        Box::new(|s| s.sqrt())
    } else if m == 2.0 {
        Box::new(|s| s)
    } else if m == -1.0 {
        Box::new(|s| 1.0 / s.sqrt())
    } else if m == -2.0 {
        Box::new(|s| 1.0 / s)
    } else {
        Box::new(move |s| s.powf(0.5 * m))
    };
    Symbol::real(dim, label, move |_, xi| {
        f(1.0 + xi.iter().map(|k| k * k).sum::<f64>())
    })
    .with_class(SymbolClass::new(m, 1.0, 0.0))
}

/// `ξ_jξ_kξ_l` (0-based axes).
pub fn cubic(dim: usize, j: usize, k: usize, l: usize) -> Symbol {
    Symbol::real(dim, format!("xi{}xi{}xi{}", j + 1, k + 1, l + 1), move |_, xi| {
        xi[j] * xi[k] * xi[l]
    })
    .with_class(SymbolClass::new(3.0, 1.0, 0.0))
}

/// `exp(−|x−c|²/2σ² − |ξ−κ|²/2τ²)`
pub fn gaussian(x_center: &[f64], x_width: f64, xi_center: &[f64], xi_width: f64) -> Symbol {
    let dim = x_center.len();
    let (cx, ck) = (x_center.to_vec(), xi_center.to_vec());
    let (ax, ak) = (0.5 / (x_width * x_width), 0.5 / (xi_width * xi_width));
    let env = Envelope {
        x_center: cx.clone(),
        x_width,
        xi_center: ck.clone(),
        xi_width,
    };
    Symbol::real(dim, format!("gaussian(σ={x_width},τ={xi_width})"), move |x, xi| {
        let mut e = 0.0;
        for a in 0..dim {
            e += ax * (x[a] - cx[a]).powi(2) + ak * (xi[a] - ck[a]).powi(2);
        }
        (-e).exp()
    })
    .with_envelope(env)
    .with_class(SymbolClass::new(f64::NEG_INFINITY, 1.0, 0.0))
}

/// Complex symbol sampled on the phase lattice, `values[x_flat·Nⁿ + ξ_flat]`.
#[derive(Clone, Debug)]
pub struct SymbolField {
    grid: PhaseGrid,
    values: Vec<Complex64>,
    closure: Option<Symbol>,
    class_meta: Option<SymbolClass>,
}

/// Pointwise evaluation on the lattice; non-finite values are rejected.
pub fn sample(symbol: &Symbol, grid: &PhaseGrid) -> Result<SymbolField> {
    if symbol.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            got: symbol.dim(),
        });
    }
    let n = grid.len();
    let dim = grid.dim();
    let xis: Vec<[f64; MAX_DIM]> = (0..n).map(|k| grid.xi_point(k)).collect();
    let mut values = vec![Complex64::new(0.0, 0.0); n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let x = grid.x_point(i);
        for (v, xi) in row.iter_mut().zip(&xis) {
            *v = symbol.eval(&x[..dim], &xi[..dim]);
        }
    });
    let field = SymbolField {
        grid: grid.clone(),
        values,
        closure: Some(symbol.clone()),
        class_meta: symbol.class(),
    };
    field.check_finite()?;
    Ok(field)
}

impl SymbolField {
    pub fn from_values(grid: PhaseGrid, values: Vec<Complex64>) -> Result<Self> {
        let n = grid.len();
        if values.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: values.len(),
            });
        }
        let f = SymbolField {
            grid,
            values,
            closure: None,
            class_meta: None,
        };
        f.check_finite()?;
        Ok(f)
    }

    fn check_finite(&self) -> Result<()> {
        if let Some(p) = self.values.iter().position(|v| !v.is_finite()) {
            let n = self.grid.len();
            let dim = self.grid.dim();
            return Err(Error::NonFinite {
                value: self.values[p].to_string(),
                x_node: self.grid.unravel(p / n)[..dim].to_vec(),
                xi_node: self.grid.unravel(p % n)[..dim].to_vec(),
            });
        }
        Ok(())
    }

    pub fn with_class(mut self, class: SymbolClass) -> Self {
        self.class_meta = Some(class);
        self
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn closure(&self) -> Option<&Symbol> {
        self.closure.as_ref()
    }

    pub fn class_meta(&self) -> Option<SymbolClass> {
        self.class_meta
    }

    #[inline]
    pub fn value(&self, x_flat: usize, xi_flat: usize) -> Complex64 {
        self.values[x_flat * self.grid.len() + xi_flat]
    }

    /// Drops the closure, keeping only lattice values.
    pub fn detached(&self) -> SymbolField {
        SymbolField {
            closure: None,
            ..self.clone()
        }
    }

    pub fn resample(&self) -> Result<SymbolField> {
        match &self.closure {
            Some(s) => sample(s, &self.grid),
            None => Ok(self.clone()),
        }
    }

    fn zip(&self, other: &SymbolField, op: BinOp) -> Result<SymbolField> {
        self.grid.same_as(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| op.apply(a, b))
            .collect();
        let closure = match (&self.closure, &other.closure) {
            (Some(f), Some(g)) => Some(f.zip(g, op)),
            _ => None,
        };
        let class_meta = closure.as_ref().and_then(|c| c.class());
        Ok(SymbolField {
            grid: self.grid.clone(),
            values,
            closure,
            class_meta,
        })
    }

    pub fn add(&self, other: &SymbolField) -> Result<SymbolField> {
        self.zip(other, BinOp::Add)
    }

    pub fn sub(&self, other: &SymbolField) -> Result<SymbolField> {
        self.zip(other, BinOp::Sub)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &SymbolField) -> Result<SymbolField> {
        self.zip(other, BinOp::Mul)
    }

    pub fn scale(&self, c: Complex64) -> SymbolField {
        SymbolField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| c * v).collect(),
            closure: self.closure.as_ref().map(|f| f.scale(c)),
            class_meta: self.class_meta,
        }
    }

    pub fn conj(&self) -> SymbolField {
        SymbolField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.conj()).collect(),
            closure: self.closure.as_ref().map(|f| f.conj()),
            class_meta: self.class_meta,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖self − other‖₂ / ‖other‖₂` over all nodes.
    pub fn relative_l2_error(&self, other: &SymbolField) -> Result<f64> {
        self.grid.same_as(&other.grid)?;
        let num: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = other.values.iter().map(|v| v.norm_sqr()).sum();
        Ok(if den == 0.0 { num.sqrt() } else { (num / den).sqrt() })
    }

    /// `max |self − other|` over nodes accepted by `keep(x_flat, ξ_flat)`.
    pub fn max_diff_where<F: Fn(usize, usize) -> bool>(
        &self,
        other: &SymbolField,
        keep: F,
    ) -> Result<f64> {
        self.grid.same_as(&other.grid)?;
        let n = self.grid.len();
        let mut worst = 0.0f64;
        for (p, (a, b)) in self.values.iter().zip(&other.values).enumerate() {
            if keep(p / n, p % n) {
                worst = worst.max((a - b).norm());
            }
        }
        Ok(worst)
    }

    /// `max |self|` over nodes accepted by `keep(x_flat, ξ_flat)`.
    pub fn max_abs_where<F: Fn(usize, usize) -> bool>(&self, keep: F) -> f64 {
        let n = self.grid.len();
        self.values
            .iter()
            .enumerate()
            .filter(|(p, _)| keep(p / n, p % n))
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max)
    }
}

/// `∂^order f` along `axis`. Closure-backed fields are differentiated through
/// the closure with the lattice step; sampled-only fields use lattice
/// stencils, centered in the interior and one-sided at the edges.
pub fn derivative(f: &SymbolField, axis: Axis, order: usize) -> Result<SymbolField> {
    if order > 4 {
        return Err(Error::DerivativeOrder(order));
    }
    let grid = f.grid();
    let dim = grid.dim();
    let (j, step) = match axis {
        Axis::X(j) => (j, grid.spacing()),
        Axis::Xi(j) => (j, grid.xi_spacing()),
    };
    if j >= dim {
        return Err(Error::DimensionMismatch { expected: dim, got: j + 1 });
    }
    if order == 0 {
        return Ok(f.clone());
    }
    if let Some(s) = f.closure() {
        return sample(&s.partial(axis, order, step)?, grid);
    }
    let n = grid.points_per_axis();
    let stencils = lattice_stencils(n, order, step);
    let total = grid.len();
    let stride_axis = n.pow((dim - 1 - j) as u32);
    let mut out = vec![Complex64::new(0.0, 0.0); total * total];
    out.par_chunks_mut(total).enumerate().for_each(|(xf, row)| {
        for (kf, v) in row.iter_mut().enumerate() {
            let (pos_flat, along) = match axis {
                Axis::X(_) => (xf, grid.unravel(xf)[j]),
                Axis::Xi(_) => (kf, grid.unravel(kf)[j]),
            };
            let (start, ref w) = stencils[along];
            let base = pos_flat - along * stride_axis;
            let mut acc = Complex64::new(0.0, 0.0);
            for (t, &c) in w.iter().enumerate() {
                let q = base + (start + t) * stride_axis;
                acc += c * match axis {
                    Axis::X(_) => f.values[q * total + kf],
                    Axis::Xi(_) => f.values[xf * total + q],
                };
            }
            *v = acc;
        }
    });
    SymbolField::from_values(grid.clone(), out)
}

/// Per-node `(first index, weights)` along one axis.
fn lattice_stencils(n: usize, order: usize, step: f64) -> Vec<(usize, Vec<f64>)> {
    let r = centered_radius(order);
    let width = order + 4;
    (0..n)
        .map(|p| {
            let (start, len) = if p >= r && p + r < n {
                (p - r, 2 * r + 1)
            } else if p < r {
                (0, width.min(n))
            } else {
                (n - width.min(n), width.min(n))
            };
            let xs: Vec<f64> = (start..start + len).map(|q| q as f64 * step).collect();
            (start, fornberg(p as f64 * step, &xs, order))
        })
        .collect()
}

/// `{f,g} = Σ_j (∂_{ξ_j}f ∂_{x_j}g − ∂_{x_j}f ∂_{ξ_j}g)`
pub fn poisson(f: &SymbolField, g: &SymbolField) -> Result<SymbolField> {
    f.grid().same_as(g.grid())?;
    let dim = f.grid().dim();
    let mut acc: Option<SymbolField> = None;
    for j in 0..dim {
        let a = derivative(f, Axis::Xi(j), 1)?.mul(&derivative(g, Axis::X(j), 1)?)?;
        let b = derivative(f, Axis::X(j), 1)?.mul(&derivative(g, Axis::Xi(j), 1)?)?;
        let term = a.sub(&b)?;
        acc = Some(match acc {
            None => term,
            Some(s) => s.add(&term)?,
        });
    }
    Ok(acc.expect("dimension ≥ 1"))
}

/// `B_jk(x)` as an x-only symbol field.
pub fn field_component(b: &MagneticField, j: usize, k: usize, grid: &PhaseGrid) -> Result<SymbolField> {
    let field = b.clone();
    let s = Symbol::real(grid.dim(), format!("B{}{}", j + 1, k + 1), move |x, _| {
        field.component(j, k, x)
    });
    sample(&s, grid)
}

/// `{f,g}_B = {f,g} − Σ_jk B_jk ∂_{ξ_j}f ∂_{ξ_k}g`
pub fn poisson_b(f: &SymbolField, g: &SymbolField, b: &MagneticField) -> Result<SymbolField> {
    let mut out = poisson(f, g)?;
    if b.is_zero() {
        return Ok(out);
    }
    let dim = f.grid().dim();
    for j in 0..dim {
        for k in 0..dim {
            if j == k {
                continue;
            }
            let bjk = field_component(b, j, k, f.grid())?;
            let term = bjk
                .mul(&derivative(f, Axis::Xi(j), 1)?)?
                .mul(&derivative(g, Axis::Xi(k), 1)?)?;
            out = out.sub(&term)?;
        }
    }
    Ok(out)
}
