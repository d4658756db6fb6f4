//! Magnetic fields, vector potentials, circulations and fluxes.
//!
//! Fields and potentials are callables, not samples. `B_jk` is stored for
//! `j < k` only and reflected, so antisymmetry holds exactly.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{GaussLegendre, DEFAULT_ORDER};

pub const MAX_DIM: usize = 3;

type PairFn = dyn Fn(usize, usize, &[f64]) -> f64 + Send + Sync;
type VecFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;
type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Closed 2-form `B_jk(x)`.
#[derive(Clone)]
pub struct MagneticField {
    dim: usize,
    upper: Option<Arc<PairFn>>,
    decay_epsilon: Option<f64>,
    label: String,
}

impl fmt::Debug for MagneticField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MagneticField")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("decay_epsilon", &self.decay_epsilon)
            .finish()
    }
}

impl MagneticField {
    /// `upper(j, k, x)` is only ever called with `j < k`.
    /// For `dim == 1` the closure is dropped: a 2-form on the line vanishes.
    pub fn new<F>(dim: usize, label: impl Into<String>, upper: F) -> Self
    where
        F: Fn(usize, usize, &[f64]) -> f64 + Send + Sync + 'static,
    {
        assert!((1..=MAX_DIM).contains(&dim), "dimension must be 1, 2 or 3");
        MagneticField {
            dim,
            upper: if dim >= 2 { Some(Arc::new(upper)) } else { None },
            decay_epsilon: None,
            label: label.into(),
        }
    }

    pub fn zero(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension must be 1, 2 or 3");
        MagneticField {
            dim,
            upper: None,
            decay_epsilon: None,
            label: "zero".into(),
        }
    }

    /// Field living in the (x₁, x₂) plane: `B₁₂ = b(x)`, all other pairs zero.
    /// Closed as long as `b` depends on x₁, x₂ only.
    pub fn planar<F>(dim: usize, label: impl Into<String>, b: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        MagneticField::new(dim, label, move |j, k, x| {
            if j == 0 && k == 1 {
                b(x)
            } else {
                0.0
            }
        })
    }

    pub fn constant(dim: usize, b12: f64) -> Self {
        if b12 == 0.0 {
            return MagneticField::zero(dim);
        }
        MagneticField::planar(dim, format!("constant:{b12}"), move |_| b12)
    }

    /// `B = dA` from the exact gradient of `A`.
    pub fn from_potential(a: &VectorPotential) -> Result<Self> {
        let grad = a
            .gradient
            .clone()
            .ok_or_else(|| Error::Precondition("potential has no gradient closure".into()))?;
        Ok(MagneticField::new(a.dim, format!("d({})", a.label), move |j, k, x| {
            grad(k, j, x) - grad(j, k, x)
        }))
    }

    pub fn with_decay(mut self, epsilon: f64) -> Self {
        self.decay_epsilon = Some(epsilon);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn decay_epsilon(&self) -> Option<f64> {
        self.decay_epsilon
    }

    pub fn is_zero(&self) -> bool {
        self.upper.is_none()
    }

    #[inline]
    pub fn component(&self, j: usize, k: usize, x: &[f64]) -> f64 {
        match &self.upper {
            None => 0.0,
            Some(f) => {
                if j < k {
                    f(j, k, x)
                } else if j > k {
                    -f(k, j, x)
                } else {
                    0.0
                }
            }
        }
    }

    /// `max |B_jk|` over a few points; used to size quadratures.
    pub fn sup_estimate(&self, points: &[Vec<f64>]) -> f64 {
        let mut m = 0.0f64;
        for x in points {
            for j in 0..self.dim {
                for k in j + 1..self.dim {
                    m = m.max(self.component(j, k, x).abs());
                }
            }
        }
        m
    }
}

/// A 1-form `A_j(x)`.
#[derive(Clone)]
pub struct VectorPotential {
    dim: usize,
    comps: Option<Arc<VecFn>>,
    gradient: Option<Arc<PairFn>>,
    label: String,
}

impl fmt::Debug for VectorPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorPotential")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("gradient", &self.gradient.is_some())
            .finish()
    }
}

impl VectorPotential {
    /// `comps(x, out)` writes all `dim` components into `out`.
    pub fn new<F>(dim: usize, label: impl Into<String>, comps: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        assert!((1..=MAX_DIM).contains(&dim), "dimension must be 1, 2 or 3");
        VectorPotential {
            dim,
            comps: Some(Arc::new(comps)),
            gradient: None,
            label: label.into(),
        }
    }

    pub fn zero(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension must be 1, 2 or 3");
        VectorPotential {
            dim,
            comps: None,
            gradient: None,
            label: "zero".into(),
        }
    }

    pub fn constant(a: &[f64]) -> Self {
        let v = a.to_vec();
        let label = format!("constant:{v:?}");
        VectorPotential::new(a.len(), label, move |_, out| out.copy_from_slice(&v))
            .with_gradient(|_, _, _| 0.0)
    }

    /// `grad(j, k, x) = ∂_k A_j(x)`.
    pub fn with_gradient<G>(mut self, grad: G) -> Self
    where
        G: Fn(usize, usize, &[f64]) -> f64 + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(grad));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_none()
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some() || self.comps.is_none()
    }

    #[inline]
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.comps {
            None => out[..self.dim].fill(0.0),
            Some(f) => f(x, &mut out[..self.dim]),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(x, &mut out);
        out
    }

    pub fn component(&self, j: usize, x: &[f64]) -> f64 {
        let mut out = [0.0; MAX_DIM];
        self.eval_into(x, &mut out);
        out[j]
    }

    /// `∂_k A_j(x)` from the exact gradient, if supplied.
    pub fn gradient(&self, j: usize, k: usize, x: &[f64]) -> Option<f64> {
        match (&self.comps, &self.gradient) {
            (None, _) => Some(0.0),
            (_, Some(g)) => Some(g(j, k, x)),
            _ => None,
        }
    }

    /// `∂_j A_k − ∂_k A_j`, exact when a gradient is present, otherwise a
    /// 4th-order centered difference with step `h`.
    pub fn curl(&self, j: usize, k: usize, x: &[f64], h: f64) -> f64 {
        if let (Some(a), Some(b)) = (self.gradient(k, j, x), self.gradient(j, k, x)) {
            return a - b;
        }
        self.curl_fd(j, k, x, h)
    }

    pub fn curl_fd(&self, j: usize, k: usize, x: &[f64], h: f64) -> f64 {
        let d = |comp: usize, axis: usize| {
            central_difference(|p| self.component(comp, p), x, axis, h)
        };
        d(k, j) - d(j, k)
    }
}

/// Scalar gauge function with its exact gradient.
#[derive(Clone)]
pub struct ScalarPotential {
    dim: usize,
    value: Arc<ScalarFn>,
    gradient: Arc<VecFn>,
    label: String,
}

impl fmt::Debug for ScalarPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarPotential")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .finish()
    }
}

impl ScalarPotential {
    pub fn new<F, G>(dim: usize, label: impl Into<String>, value: F, gradient: G) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        ScalarPotential {
            dim,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            label: label.into(),
        }
    }

    pub fn from_polynomial(p: Polynomial) -> Self {
        let dim = p.dim();
        let grads: Vec<Polynomial> = (0..dim).map(|k| p.derivative(k)).collect();
        let label = format!("poly(deg {})", p.degree());
        let pv = p.clone();
        ScalarPotential::new(dim, label, move |x| pv.eval(x), move |x, out| {
            for (o, g) in out.iter_mut().zip(&grads) {
                *o = g.eval(x);
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        (self.gradient)(x, out)
    }
}

/// Sparse real polynomial in `dim` variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<(Vec<u32>, f64)>,
}

impl Polynomial {
    pub fn new(dim: usize, terms: Vec<(Vec<u32>, f64)>) -> Self {
        assert!(terms.iter().all(|(e, _)| e.len() == dim));
        Polynomial { dim, terms }
    }

    pub fn zero(dim: usize) -> Self {
        Polynomial { dim, terms: vec![] }
    }

    /// All monomials of total degree `≤ degree`, coefficients from `coef`.
    pub fn dense(dim: usize, degree: u32, mut coef: impl FnMut() -> f64) -> Self {
        let mut terms = Vec::new();
        for e in exponents_up_to(dim, degree) {
            terms.push((e, coef()));
        }
        Polynomial { dim, terms }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[(Vec<u32>, f64)] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(e, _)| e.iter().sum())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(&p, &xi)| xi.powi(p as i32)).product::<f64>())
            .sum()
    }

    pub fn derivative(&self, axis: usize) -> Polynomial {
        let mut terms = Vec::new();
        for (e, c) in &self.terms {
            if e[axis] > 0 {
                let mut e2 = e.clone();
                e2[axis] -= 1;
                terms.push((e2, c * e[axis] as f64));
            }
        }
        Polynomial {
            dim: self.dim,
            terms,
        }
    }
}

fn exponents_up_to(dim: usize, degree: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; dim];
    fn rec(axis: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if axis == cur.len() {
            out.push(cur.clone());
            return;
        }
        for p in 0..=left {
            cur[axis] = p;
            rec(axis + 1, left - p, cur, out);
        }
        cur[axis] = 0;
    }
    rec(0, degree, &mut cur, &mut out);
    out
}

/// Vector potential with polynomial components and exact gradient.
pub fn polynomial_potential(comps: Vec<Polynomial>) -> VectorPotential {
    let dim = comps.len();
    let grads: Vec<Vec<Polynomial>> = comps
        .iter()
        .map(|p| (0..dim).map(|k| p.derivative(k)).collect())
        .collect();
    let deg = comps.iter().map(|p| p.degree()).max().unwrap_or(0);
    VectorPotential::new(dim, format!("poly(deg {deg})"), move |x, out| {
        for (o, p) in out.iter_mut().zip(&comps) {
            *o = p.eval(x);
        }
    })
    .with_gradient(move |j, k, x| grads[j][k].eval(x))
}

/// Ordered corners of an oriented plane triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct Triangle {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl Triangle {
    pub fn new(a: &[f64], b: &[f64], c: &[f64]) -> Self {
        assert!(a.len() == b.len() && b.len() == c.len());
        Triangle {
            a: a.to_vec(),
            b: b.to_vec(),
            c: c.to_vec(),
        }
    }
}

/// `A_j(x) = −Σ_k ∫₀¹ B_jk(sx) s x_k ds` at the default order.
pub fn transversal_gauge(b: &MagneticField) -> VectorPotential {
    transversal_gauge_with_order(b, DEFAULT_ORDER)
}

pub fn transversal_gauge_with_order(b: &MagneticField, order: usize) -> VectorPotential {
    let dim = b.dim();
    if b.is_zero() {
        return VectorPotential::zero(dim);
    }
    let field = b.clone();
    let rule = GaussLegendre::new(order).unit_interval();
    VectorPotential::new(dim, format!("transversal({})", b.label()), move |x, out| {
        out.fill(0.0);
        let mut sx = [0.0; MAX_DIM];
        for &(s, w) in &rule {
            for (p, &xi) in sx.iter_mut().zip(x) {
                *p = s * xi;
            }
            let p = &sx[..dim];
            for j in 0..dim {
                for k in j + 1..dim {
                    let bjk = field.component(j, k, p);
                    // A_j gets −B_jk x_k, A_k gets −B_kj x_j = +B_jk x_j.
                    out[j] -= w * s * bjk * x[k];
                    out[k] += w * s * bjk * x[j];
                }
            }
        }
    })
}

/// Γ^A([x,y]) at the default order.
pub fn circulation(a: &VectorPotential, x: &[f64], y: &[f64]) -> f64 {
    circulation_with(a, x, y, &GaussLegendre::default())
}

/// `∫₀¹ ⟨A((1−s)x + sy), y − x⟩ ds`. Exactly antisymmetric in `(x, y)`.
pub fn circulation_with(a: &VectorPotential, x: &[f64], y: &[f64], rule: &GaussLegendre) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    let dim = a.dim();
    let mut mid = [0.0; MAX_DIM];
    let mut half = [0.0; MAX_DIM];
    let mut diff = [0.0; MAX_DIM];
    for i in 0..dim {
        mid[i] = (x[i] + y[i]) * 0.5;
        diff[i] = y[i] - x[i];
        half[i] = diff[i] * 0.5;
    }
    let mut p = [0.0; MAX_DIM];
    let mut av = [0.0; MAX_DIM];
    let integral = rule.integrate_symmetric(|t| {
        for i in 0..dim {
            p[i] = mid[i] + t * half[i];
        }
        a.eval_into(&p[..dim], &mut av[..dim]);
        let mut acc = 0.0;
        for i in 0..dim {
            acc += av[i] * diff[i];
        }
        acc
    });
    0.5 * integral
}

/// Γ^B(<a,b,c>) at the default order.
pub fn flux_triangle(b: &MagneticField, t: &Triangle) -> f64 {
    flux_triangle_with(b, t, &GaussLegendre::default())
}

/// `Σ_jk u_j v_k ∫∫ s B_jk(a + s u + s t v) ds dt`, `u = b − a`, `v = c − b`.
pub fn flux_triangle_with(b: &MagneticField, t: &Triangle, rule: &GaussLegendre) -> f64 {
    if b.is_zero() {
        return 0.0;
    }
    let dim = b.dim();
    let mut u = [0.0; MAX_DIM];
    let mut v = [0.0; MAX_DIM];
    for i in 0..dim {
        u[i] = t.b[i] - t.a[i];
        v[i] = t.c[i] - t.b[i];
    }
    simplex_flux(b, &t.a, &u[..dim], &v[..dim], rule)
}

fn simplex_flux(b: &MagneticField, p: &[f64], u: &[f64], v: &[f64], rule: &GaussLegendre) -> f64 {
    let dim = b.dim();
    let nodes = rule.unit_interval();
    let mut q = [0.0; MAX_DIM];
    let mut acc = 0.0;
    for &(s, ws) in &nodes {
        for &(t, wt) in &nodes {
            for i in 0..dim {
                q[i] = p[i] + s * u[i] + s * t * v[i];
            }
            let x = &q[..dim];
            let mut form = 0.0;
            for j in 0..dim {
                for k in j + 1..dim {
                    form += b.component(j, k, x) * (u[j] * v[k] - u[k] * v[j]);
                }
            }
            acc += ws * wt * s * form;
        }
    }
    acc
}

/// `F_B(x,y,z) = Σ_jk y_j (z_k − y_k) ∫∫ s B_jk(x−y−z + 2sy + 2st(z−y)) ds dt`.
pub fn f_b(b: &MagneticField, x: &[f64], y: &[f64], z: &[f64]) -> f64 {
    f_b_with(b, x, y, z, &GaussLegendre::default())
}

pub fn f_b_with(b: &MagneticField, x: &[f64], y: &[f64], z: &[f64], rule: &GaussLegendre) -> f64 {
    if b.is_zero() {
        return 0.0;
    }
    let dim = b.dim();
    let mut p = [0.0; MAX_DIM];
    let mut u = [0.0; MAX_DIM];
    let mut v = [0.0; MAX_DIM];
    for i in 0..dim {
        p[i] = x[i] - y[i] - z[i];
        u[i] = 2.0 * y[i];
        v[i] = 2.0 * (z[i] - y[i]);
    }
    // u_j v_k = 4 y_j (z_k − y_k)
    0.25 * simplex_flux(b, &p[..dim], &u[..dim], &v[..dim], rule)
}

/// Corners of the triangle whose flux is `4 F_B(x,y,z)`.
pub fn f_b_triangle(x: &[f64], y: &[f64], z: &[f64]) -> Triangle {
    let a: Vec<f64> = (0..x.len()).map(|i| x[i] - y[i] + z[i]).collect();
    let b: Vec<f64> = (0..x.len()).map(|i| x[i] - y[i] - z[i]).collect();
    let c: Vec<f64> = (0..x.len()).map(|i| x[i] + y[i] - z[i]).collect();
    Triangle { a, b, c }
}

pub fn stokes_residual(a: &VectorPotential, b: &MagneticField, t: &Triangle) -> f64 {
    let flux = flux_triangle(b, t);
    let circ = circulation(a, &t.a, &t.b) + circulation(a, &t.b, &t.c) + circulation(a, &t.c, &t.a);
    (flux - circ).abs()
}

/// `Λ^A(x,y) = exp(−iΓ^A([x,y]))`.
pub fn lambda_a(a: &VectorPotential, x: &[f64], y: &[f64]) -> Complex64 {
    Complex64::from_polar(1.0, -circulation(a, x, y))
}

/// `ω_B(x,y,z) = exp(−4iF_B(x,y,z))`.
pub fn omega_b(b: &MagneticField, x: &[f64], y: &[f64], z: &[f64]) -> Complex64 {
    Complex64::from_polar(1.0, -4.0 * f_b(b, x, y, z))
}

/// `Ω^B(a,b,c) = exp(−iΓ^B(<a,b,c>))`.
pub fn big_omega_b(b: &MagneticField, t: &Triangle) -> Complex64 {
    Complex64::from_polar(1.0, -flux_triangle(b, t))
}

/// `A' = A + ∇φ`.
pub fn gauge_transform(a: &VectorPotential, phi: &ScalarPotential) -> VectorPotential {
    let dim = a.dim();
    assert_eq!(dim, phi.dim(), "gauge function dimension mismatch");
    let base = a.clone();
    let ph = phi.clone();
    let label = format!("{}+grad({})", a.label(), phi.label());
    let out = VectorPotential::new(dim, label, move |x, out| {
        let mut g = [0.0; MAX_DIM];
        base.eval_into(x, out);
        ph.gradient_into(x, &mut g[..dim]);
        for (o, gi) in out.iter_mut().zip(g) {
            *o += gi;
        }
    });
    // The Hessian of φ is symmetric, so dA' = dA; reuse A's gradient where
    // available and fall back to differences of ∇φ.
    let base = a.clone();
    let ph = phi.clone();
    out.with_gradient(move |j, k, x| {
        let da = base
            .gradient(j, k, x)
            .unwrap_or_else(|| central_difference(|p| base.component(j, p), x, k, 1e-3));
        let dphi = central_difference(
            |p| {
                let mut g = [0.0; MAX_DIM];
                ph.gradient_into(p, &mut g[..p.len()]);
                g[j]
            },
            x,
            k,
            1e-3,
        );
        da + dphi
    })
}

/// 4th-order centered difference of `f` along `axis`.
pub fn central_difference<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], axis: usize, h: f64) -> f64 {
    let mut p = x.to_vec();
    let mut at = |off: f64| {
        p[axis] = x[axis] + off;
        f(&p)
    };
    let (m2, m1, p1, p2) = (at(-2.0 * h), at(-h), at(h), at(2.0 * h));
    (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h)
}

/// Max over sampled points and triples `j<k<l` of the cyclic sum
/// `|∂_l B_jk + ∂_j B_kl + ∂_k B_lj|` by centered differences.
pub fn closedness_residual(b: &MagneticField, points: &[Vec<f64>], h: f64) -> f64 {
    let dim = b.dim();
    let mut worst = 0.0f64;
    for x in points {
        for j in 0..dim {
            for k in j + 1..dim {
                for l in k + 1..dim {
                    let d = |p: usize, q: usize, axis: usize| {
                        central_difference(|y| b.component(p, q, y), x, axis, h)
                    };
                    let r = d(j, k, l) + d(k, l, j) + d(l, j, k);
                    worst = worst.max(r.abs());
                }
            }
        }
    }
    worst
}

/// Result of the decay-hypothesis check.
#[derive(Clone, Debug, serde::Serialize)]
pub struct DecayReport {
    pub epsilon: f64,
    /// `max ⟨x⟩^{1+ε} |∂^α B_jk(x)|` for `|α| = 0, 1, 2`.
    pub weighted_sup: [f64; 3],
    pub samples: usize,
}

impl DecayReport {
    pub fn max(&self) -> f64 {
        self.weighted_sup.iter().cloned().fold(0.0, f64::max)
    }
}

/// Reports `max ⟨x⟩^{1+ε}|∂^α B_jk(x)|` over the sample points, `|α| ≤ 2`,
/// derivatives by centered differences with step `h`.
pub fn decay_report(b: &MagneticField, points: &[Vec<f64>], h: f64) -> Result<DecayReport> {
    let eps = b
        .decay_epsilon()
        .ok_or_else(|| Error::Precondition("field declares no decay exponent".into()))?;
    let dim = b.dim();
    let mut sup = [0.0f64; 3];
    for x in points {
        let weight = (1.0 + x.iter().map(|v| v * v).sum::<f64>()).sqrt().powf(1.0 + eps);
        for j in 0..dim {
            for k in j + 1..dim {
                let f = |y: &[f64]| b.component(j, k, y);
                sup[0] = sup[0].max(weight * f(x).abs());
                for a1 in 0..dim {
                    let d1 = central_difference(&f, x, a1, h);
                    sup[1] = sup[1].max(weight * d1.abs());
                    for a2 in a1..dim {
                        let d2 = central_difference(|y| central_difference(&f, y, a1, h), x, a2, h);
                        sup[2] = sup[2].max(weight * d2.abs());
                    }
                }
            }
        }
    }
    Ok(DecayReport {
        epsilon: eps,
        weighted_sup: sup,
        samples: points.len(),
    })
}

/// Parses `"zero"`, `"constant:b"`, `"periodic:b0,amp,k"`, `"shortrange:b0,eps"`.
///
/// periodic: `B₁₂ = b0 + amp·cos(k x₁)·cos(k x₂)`;
/// shortrange: `B₁₂ = b0·⟨x⟩^{−1−eps}`, declared with decay exponent `eps`.
pub fn field_preset(spec: &str, dim: usize) -> Result<MagneticField> {
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
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::bad_params(name, "non-finite parameter"));
    }
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
    if !(1..=MAX_DIM).contains(&dim) {
        return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
    }
    match name {
        "zero" | "flat" | "none" => {
            want(0)?;
            Ok(MagneticField::zero(dim))
        }
        "constant" => {
            want(1)?;
            Ok(MagneticField::constant(dim, params[0]))
        }
        "periodic" => {
            want(3)?;
            let (b0, amp, k) = (params[0], params[1], params[2]);
            Ok(MagneticField::planar(dim, spec.to_string(), move |x| {
                b0 + amp * (k * x[0]).cos() * (k * x[1]).cos()
            }))
        }
        "shortrange" => {
            want(2)?;
            let (b0, eps) = (params[0], params[1]);
            if eps <= 0.0 {
                return Err(Error::bad_params(name, "eps must be positive"));
            }
            // Depends on all coordinates, so only closed for n = 2; in three
            // dimensions the profile uses (x₁, x₂) only.
            Ok(MagneticField::planar(dim, spec.to_string(), move |x| {
                let r2 = x[0] * x[0] + x[1] * x[1];
                b0 * (1.0 + r2).powf(-(1.0 + eps) / 2.0)
            })
            .with_decay(eps))
        }
        _ => Err(Error::UnknownPreset(spec.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn transversal_gauge_of_constant_field() {
        let b = MagneticField::constant(2, 1.0);
        let a = transversal_gauge(&b);
        let v = a.eval(&[2.0, 4.0]);
        assert!(close(v[0], -2.0, 1e-14) && close(v[1], 1.0, 1e-14), "{v:?}");
    }

    #[test]
    fn transversal_gauge_of_linear_field() {
        let b = MagneticField::planar(2, "x1", |x| x[0]);
        let a = transversal_gauge(&b);
        let v = a.eval(&[3.0, 0.0]);
        assert!(close(v[0], 0.0, 1e-14) && close(v[1], 3.0, 1e-13), "{v:?}");
    }

    #[test]
    fn zero_field_gives_zero_potential() {
        let a = transversal_gauge(&MagneticField::zero(2));
        assert_eq!(a.eval(&[1.5, -2.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn one_dimensional_field_vanishes() {
        let b = MagneticField::new(1, "ignored", |_, _, _| 7.0);
        assert!(b.is_zero());
        assert_eq!(b.component(0, 0, &[1.0]), 0.0);
    }

    #[test]
    fn circulation_examples() {
        let a = VectorPotential::constant(&[1.0, 0.0]);
        assert!(close(circulation(&a, &[0.0, 0.0], &[2.0, 3.0]), 2.0, 1e-14));
        assert_eq!(circulation(&a, &[0.3, 0.1], &[0.3, 0.1]), 0.0);
        // ∇(x₁x₂)
        let g = VectorPotential::new(2, "grad", |x, out| {
            out[0] = x[1];
            out[1] = x[0];
        });
        assert!(close(circulation(&g, &[0.0, 0.0], &[1.0, 2.0]), 2.0, 1e-14));
    }

    #[test]
    fn flux_examples() {
        let b = MagneticField::constant(2, 1.0);
        let t = Triangle::new(&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]);
        assert!(close(flux_triangle(&b, &t), 0.5, 1e-14));
        let t = Triangle::new(&[0.0, 0.0], &[0.0, 1.0], &[1.0, 0.0]);
        assert!(close(flux_triangle(&b, &t), -0.5, 1e-14));
        let t = Triangle::new(&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0]);
        assert_eq!(flux_triangle(&b, &t), 0.0);
    }

    #[test]
    fn stokes_examples() {
        let b = MagneticField::constant(2, 1.0);
        let a = transversal_gauge(&b);
        let t = Triangle::new(&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]);
        assert!(stokes_residual(&a, &b, &t) <= 1e-12);

        let z = MagneticField::zero(2);
        let t = Triangle::new(&[0.2, 5.0], &[-1.0, 0.0], &[3.0, 1.0]);
        assert_eq!(stokes_residual(&VectorPotential::zero(2), &z, &t), 0.0);

        let b = MagneticField::planar(2, "sin", |x| x[0].sin());
        let a = transversal_gauge(&b);
        let t = Triangle::new(&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]);
        assert!(stokes_residual(&a, &b, &t) <= 1e-8);
    }

    #[test]
    fn f_b_matches_corner_flux() {
        let b = MagneticField::planar(2, "poly", |x| 1.0 + 0.3 * x[0] - 0.2 * x[1] * x[1]);
        let (x, y, z) = ([0.4, -0.7], [1.1, 0.3], [-0.5, 0.9]);
        let four_f = 4.0 * f_b(&b, &x, &y, &z);
        let flux = flux_triangle(&b, &f_b_triangle(&x, &y, &z));
        assert!(close(four_f, flux, 1e-13), "{four_f} vs {flux}");
    }

    #[test]
    fn phases_are_unimodular() {
        let b = MagneticField::constant(2, 1.0);
        let a = transversal_gauge(&b);
        let l = lambda_a(&a, &[0.3, 1.0], &[-2.0, 0.5]);
        assert!(close(l.norm(), 1.0, 1e-15));
        assert_eq!(l, lambda_a(&a, &[-2.0, 0.5], &[0.3, 1.0]).conj());
        let w = omega_b(&MagneticField::zero(2), &[1.0, 2.0], &[0.5, 0.1], &[3.0, 3.0]);
        assert_eq!(w, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn gauge_transform_examples() {
        let phi = ScalarPotential::from_polynomial(Polynomial::new(2, vec![(vec![1, 1], 1.0)]));
        let a = gauge_transform(&VectorPotential::zero(2), &phi);
        assert_eq!(a.eval(&[2.0, 5.0]), vec![5.0, 2.0]);

        let zero_phi = ScalarPotential::from_polynomial(Polynomial::zero(2));
        let base = transversal_gauge(&MagneticField::constant(2, 0.7));
        let same = gauge_transform(&base, &zero_phi);
        assert_eq!(same.eval(&[1.0, -3.0]), base.eval(&[1.0, -3.0]));

        let b = MagneticField::planar(2, "x1", |x| x[0]);
        let a = transversal_gauge(&b);
        let phi = ScalarPotential::new(
            2,
            "sin",
            |x| (x[0] * x[1]).sin(),
            |x, g| {
                let c = (x[0] * x[1]).cos();
                g[0] = x[1] * c;
                g[1] = x[0] * c;
            },
        );
        let a2 = gauge_transform(&a, &phi);
        for x in [[0.3, 0.2], [1.0, -0.5], [-0.7, 0.9]] {
            let d = (a2.curl_fd(0, 1, &x, 1e-3) - a.curl_fd(0, 1, &x, 1e-3)).abs();
            assert!(d <= 1e-8, "{d}");
        }
    }

    #[test]
    fn presets_parse() {
        assert!(field_preset("constant:0.5", 2).is_ok());
        assert!(field_preset("periodic:1,0.2,0.5", 2).is_ok());
        let s = field_preset("shortrange:1,0.5", 2).unwrap();
        assert_eq!(s.decay_epsilon(), Some(0.5));
        assert!(matches!(field_preset("bogus:1", 2), Err(Error::UnknownPreset(_))));
        assert!(field_preset("constant:1,2", 2).is_err());
    }

    #[test]
    fn decay_report_is_finite() {
        let b = field_preset("shortrange:1,0.5", 2).unwrap();
        let pts: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 - 10.0, 0.5 * i as f64]).collect();
        let r = decay_report(&b, &pts, 1e-3).unwrap();
        assert!(r.max().is_finite() && r.max() > 0.0);
        assert!(r.weighted_sup[0] <= 1.0 + 1e-12);
    }

    #[test]
    fn curl_of_polynomial_potential() {
        let a = polynomial_potential(vec![
            Polynomial::new(2, vec![(vec![0, 1], -0.5), (vec![2, 1], 0.3)]),
            Polynomial::new(2, vec![(vec![1, 0], 0.5)]),
        ]);
        let b = MagneticField::from_potential(&a).unwrap();
        // B₁₂ = ∂₁A₂ − ∂₂A₁ = 0.5 + 0.5 − 0.3 x₁²
        let x = [1.2, -0.4];
        assert!(close(b.component(0, 1, &x), 1.0 - 0.3 * 1.44, 1e-14));
        assert!(close(b.component(0, 1, &x), a.curl_fd(0, 1, &x, 1e-3), 1e-10));
    }
}
