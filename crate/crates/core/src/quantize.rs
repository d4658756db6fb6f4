//! Dense operator matrices for the Weyl, minimal-coupling and magnetic
//! quantizations, and the inverse map back to symbols.
//!
//! Kernel: `K[i,j] = N^{−n} Λ^A(x_i,x_j) F((x_i+x_j)/2, j−i mod N)` with
//! `F(m, r) = Σ_k f(m, ξ_k) e^{−2πi r·(k−N/2)/N}`. The weight `hⁿ` of the
//! integral operator is folded into the entries, so `apply` is a plain
//! matrix–vector product and the adjoint is the conjugate transpose.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{checker_sign, NdFft};
use crate::fields::{circulation, gauge_transform, ScalarPotential, VectorPotential, MAX_DIM};
use crate::grid::{GridFunction, PhaseGrid};
use crate::symbols::{sample, Symbol, SymbolField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Weyl,
    Minimal,
    Magnetic,
}

impl Scheme {
    pub fn code(self) -> u8 {
        match self {
            Scheme::Weyl => 0,
            Scheme::Minimal => 1,
            Scheme::Magnetic => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Scheme> {
        match c {
            0 => Some(Scheme::Weyl),
            1 => Some(Scheme::Minimal),
            2 => Some(Scheme::Magnetic),
            _ => None,
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        match s {
            "weyl" => Some(Scheme::Weyl),
            "minimal" => Some(Scheme::Minimal),
            "magnetic" => Some(Scheme::Magnetic),
            _ => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Weyl => "weyl",
            Scheme::Minimal => "minimal",
            Scheme::Magnetic => "magnetic",
        })
    }
}

/// Dense `Nⁿ × Nⁿ` operator; rows index output nodes, columns input nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    grid: PhaseGrid,
    entries: DMatrix<Complex64>,
    scheme: Scheme,
    potential: String,
}

impl OperatorMatrix {
    pub fn new(grid: PhaseGrid, entries: DMatrix<Complex64>, scheme: Scheme, potential: impl Into<String>) -> Result<Self> {
        let n = grid.len();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: entries.nrows(),
            });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("non-finite operator entry".into()));
        }
        Ok(OperatorMatrix {
            grid,
            entries,
            scheme,
            potential: potential.into(),
        })
    }

    pub fn identity(grid: &PhaseGrid, scheme: Scheme, potential: impl Into<String>) -> Self {
        let n = grid.len();
        OperatorMatrix {
            grid: grid.clone(),
            entries: DMatrix::identity(n, n),
            scheme,
            potential: potential.into(),
        }
    }

    /// Multiplication by a function of position.
    pub fn diagonal<F: Fn(&[f64]) -> Complex64>(grid: &PhaseGrid, f: F, scheme: Scheme, potential: impl Into<String>) -> Self {
        let n = grid.len();
        let dim = grid.dim();
        let d = DVector::from_iterator(n, (0..n).map(|i| f(&grid.x_point(i)[..dim])));
        OperatorMatrix {
            grid: grid.clone(),
            entries: DMatrix::from_diagonal(&d),
            scheme,
            potential: potential.into(),
        }
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn potential(&self) -> &str {
        &self.potential
    }

    pub fn with_entries(&self, entries: DMatrix<Complex64>) -> OperatorMatrix {
        OperatorMatrix {
            grid: self.grid.clone(),
            entries,
            scheme: self.scheme,
            potential: self.potential.clone(),
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.entries.norm()
    }

    /// `‖M − M†‖_F / ‖M‖_F`
    pub fn hermiticity_defect(&self) -> f64 {
        let norm = self.entries.norm();
        if norm == 0.0 {
            return 0.0;
        }
        (&self.entries - self.entries.adjoint()).norm() / norm
    }

    pub fn compose(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.grid.same_as(&other.grid)?;
        Ok(self.with_entries(&self.entries * &other.entries))
    }

    pub fn add(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.grid.same_as(&other.grid)?;
        Ok(self.with_entries(&self.entries + &other.entries))
    }

    pub fn sub(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.grid.same_as(&other.grid)?;
        Ok(self.with_entries(&self.entries - &other.entries))
    }

    pub fn scale(&self, c: Complex64) -> OperatorMatrix {
        self.with_entries(self.entries.map(|v| c * v))
    }

    /// `‖self − other‖_F / ‖self‖_F`
    pub fn relative_difference(&self, other: &OperatorMatrix) -> Result<f64> {
        self.grid.same_as(&other.grid)?;
        let den = self.entries.norm();
        let num = (&self.entries - &other.entries).norm();
        Ok(if den == 0.0 { num } else { num / den })
    }

    /// `[self, other]`
    pub fn commutator(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.grid.same_as(&other.grid)?;
        Ok(self.with_entries(&self.entries * &other.entries - &other.entries * &self.entries))
    }
}

/// `M u`
pub fn apply(m: &OperatorMatrix, u: &GridFunction) -> Result<GridFunction> {
    m.grid.same_as(u.grid())?;
    let v = DVector::from_column_slice(u.values());
    let out = &m.entries * v;
    GridFunction::new(m.grid.clone(), out.as_slice().to_vec())
}

enum Source<'a> {
    Closure(&'a Symbol),
    Sampled(&'a SymbolField),
}

/// Caches the phase matrix `Λ^A(x_i, x_j)` for one potential on one grid.
pub struct Quantizer {
    grid: PhaseGrid,
    potential: VectorPotential,
    /// Row-major; `None` when `A ≡ 0`.
    phases: Option<Vec<Complex64>>,
    fft: NdFft,
}

impl Quantizer {
    pub fn new(grid: &PhaseGrid, potential: &VectorPotential) -> Result<Self> {
        if potential.dim() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                got: potential.dim(),
            });
        }
        let phases = if potential.is_zero() {
            None
        } else {
            Some(phase_matrix(grid, potential))
        };
        Ok(Quantizer {
            grid: grid.clone(),
            potential: potential.clone(),
            phases,
            fft: NdFft::new(grid.points_per_axis(), grid.dim()),
        })
    }

    pub fn weyl(grid: &PhaseGrid) -> Self {
        Quantizer::new(grid, &VectorPotential::zero(grid.dim())).expect("dimensions agree")
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn potential(&self) -> &VectorPotential {
        &self.potential
    }

    #[inline]
    pub fn phase(&self, i: usize, j: usize) -> Complex64 {
        match &self.phases {
            None => Complex64::new(1.0, 0.0),
            Some(p) => p[i * self.grid.len() + j],
        }
    }

    /// `Op^A(f)`. Closure-backed fields are evaluated exactly at midpoints;
    /// sampled-only fields are trigonometrically interpolated in x.
    pub fn magnetic(&self, f: &SymbolField) -> Result<OperatorMatrix> {
        self.grid.same_as(f.grid())?;
        let src = match f.closure() {
            Some(s) => Source::Closure(s),
            None => Source::Sampled(f),
        };
        let scheme = if self.potential.is_zero() {
            Scheme::Weyl
        } else {
            Scheme::Magnetic
        };
        let k = self.assemble(&src, true);
        OperatorMatrix::new(self.grid.clone(), k, scheme, self.potential.label())
    }

    /// Kernel assembly; `twisted` multiplies by the phase `Λ^A`.
    fn assemble(&self, src: &Source, twisted: bool) -> DMatrix<Complex64> {
        let grid = &self.grid;
        let dim = grid.dim();
        let n = grid.points_per_axis();
        let total = grid.len();
        let half_h = 0.5 * grid.spacing();
        let l = grid.half_width();
        let scale = 1.0 / total as f64;
        let signs: Vec<f64> = (0..total).map(|r| checker_sign(r, n, dim) * scale).collect();
        let xis: Vec<[f64; MAX_DIM]> = (0..total).map(|k| grid.xi_point(k)).collect();
        let mut out = DMatrix::from_element(total, total, Complex64::new(0.0, 0.0));

        for pattern in 0..(1usize << dim) {
            let mut mask = [false; MAX_DIM];
            for (a, m) in mask.iter_mut().enumerate().take(dim) {
                *m = pattern >> (dim - 1 - a) & 1 == 1;
            }
            let shifted = match src {
                Source::Sampled(f) if mask.iter().any(|&b| b) => Some(shift_x(f, &self.fft, mask, 1.0)),
                _ => None,
            };
            // doubled midpoint index q = 2p + s, one per node
            let qs: Vec<[usize; MAX_DIM]> = (0..total)
                .map(|c| {
                    let p = grid.unravel(c);
                    let mut q = [0; MAX_DIM];
                    for a in 0..dim {
                        q[a] = 2 * p[a] + mask[a] as usize;
                    }
                    q
                })
                .collect();

            for chunk in qs.chunks(64) {
                let blocks: Vec<Vec<(usize, usize, Complex64)>> = chunk
                    .par_iter()
                    .map(|q| {
                        let mut row = vec![Complex64::new(0.0, 0.0); total];
                        match src {
                            Source::Closure(s) => {
                                let mut m = [0.0; MAX_DIM];
                                for a in 0..dim {
                                    m[a] = -l + q[a] as f64 * half_h;
                                }
                                for (v, xi) in row.iter_mut().zip(&xis) {
                                    *v = s.eval(&m[..dim], &xi[..dim]);
                                }
                            }
                            Source::Sampled(f) => {
                                let mut p = [0; MAX_DIM];
                                for a in 0..dim {
                                    p[a] = q[a] / 2;
                                }
                                let pf = grid.ravel(&p);
                                let vals = shifted.as_deref().unwrap_or(f.values());
                                row.copy_from_slice(&vals[pf * total..(pf + 1) * total]);
                            }
                        }
                        self.fft.forward(&mut row);
                        for (v, s) in row.iter_mut().zip(&signs) {
                            *v *= *s;
                        }
                        let mut entries = Vec::new();
                        for_each_pair(q, dim, n, |i, j, r, _| {
                            entries.push((i, j, if twisted { self.phase(i, j) * row[r] } else { row[r] }));
                        });
                        entries
                    })
                    .collect();
                for block in blocks {
                    for (i, j, v) in block {
                        out[(i, j)] = v;
                    }
                }
            }
        }
        out
    }

    /// `Op_A(p) = Op(p(x, ξ − A(x)))`.
    pub fn minimal(&self, p: &Symbol) -> Result<OperatorMatrix> {
        let pulled = nu_pullback(p, &self.potential);
        // validates finiteness on the lattice before assembly
        sample(&pulled, &self.grid)?;
        let k = self.assemble(&Source::Closure(&pulled), false);
        let scheme = if self.potential.is_zero() {
            Scheme::Weyl
        } else {
            Scheme::Minimal
        };
        OperatorMatrix::new(self.grid.clone(), k, scheme, self.potential.label())
    }

    /// Inverse of [`Quantizer::magnetic`]: strip the phase, read the kernel
    /// along anti-diagonals, move odd separations back onto the lattice by
    /// a half-step trigonometric shift, and transform over the separation.
    pub fn symbol_of(&self, m: &OperatorMatrix) -> Result<SymbolField> {
        self.grid.same_as(m.grid())?;
        match m.scheme() {
            Scheme::Magnetic if m.potential() != self.potential.label() => {
                return Err(Error::SchemeMismatch(format!(
                    "operator built with potential `{}`, inversion requested with `{}`",
                    m.potential(),
                    self.potential.label()
                )))
            }
            Scheme::Weyl | Scheme::Minimal if !self.potential.is_zero() => {
                return Err(Error::SchemeMismatch(format!(
                    "{} operator inverted with nonzero potential `{}`",
                    m.scheme(),
                    self.potential.label()
                )))
            }
            _ => {}
        }
        let grid = &self.grid;
        let dim = grid.dim();
        let n = grid.points_per_axis() as i64;
        let total = grid.len();
        let nn = total as f64;
        let k = m.entries();

        // table[r][p] ≈ F(x_p, r)
        let table: Vec<Vec<Complex64>> = (0..total)
            .into_par_iter()
            .map(|r| {
                let ridx = grid.unravel(r);
                let mut mask = [false; MAX_DIM];
                for a in 0..dim {
                    mask[a] = signed_class(ridx[a], n as usize).rem_euclid(2) == 1;
                }
                let mut col = vec![Complex64::new(0.0, 0.0); total];
                for (pf, v) in col.iter_mut().enumerate() {
                    let pidx = grid.unravel(pf);
                    let mut q = [0usize; MAX_DIM];
                    for a in 0..dim {
                        q[a] = 2 * pidx[a] + mask[a] as usize;
                    }
                    // Nyquist-class nodes read from two pairs are averaged;
                    // those read from none stay zero.
                    let mut acc = Complex64::new(0.0, 0.0);
                    visit_class(&q, r, dim, n as usize, |i, j, w| {
                        acc += k[(i, j)] * self.phase(i, j).conj() * w;
                    });
                    *v = acc * nn;
                }
                self.fft.half_shift(&mut col, mask, -1.0);
                col
            })
            .collect();

        let mut values = vec![Complex64::new(0.0, 0.0); total * total];
        values.par_chunks_mut(total).enumerate().for_each(|(pf, row)| {
            for (r, v) in row.iter_mut().enumerate() {
                *v = table[r][pf] * checker_sign(r, grid.points_per_axis(), dim);
            }
            self.fft.inverse(row);
            for v in row.iter_mut() {
                *v /= nn;
            }
        });
        SymbolField::from_values(grid.clone(), values)
    }

    /// `‖e^{iφ} Op(f) e^{−iφ} − Op'(f)‖_F / ‖Op(f)‖_F` where `Op'` uses
    /// `A + ∇φ`. `Scheme::Minimal` needs a closure-backed symbol.
    pub fn gauge_covariance_residual(&self, f: &SymbolField, phi: &ScalarPotential, scheme: Scheme) -> Result<f64> {
        let shifted = Quantizer::new(&self.grid, &gauge_transform(&self.potential, phi))?;
        let (m1, m2) = match scheme {
            Scheme::Minimal => {
                let s = f
                    .closure()
                    .ok_or_else(|| Error::SchemeMismatch("minimal scheme needs a closure-backed symbol".into()))?;
                (self.minimal(s)?, shifted.minimal(s)?)
            }
            _ => (self.magnetic(f)?, shifted.magnetic(f)?),
        };
        let dim = self.grid.dim();
        let u: Vec<Complex64> = (0..self.grid.len())
            .map(|i| Complex64::from_polar(1.0, phi.value(&self.grid.x_point(i)[..dim])))
            .collect();
        let mut conj = m1.entries().clone();
        for j in 0..conj.ncols() {
            for i in 0..conj.nrows() {
                conj[(i, j)] = u[i] * conj[(i, j)] * u[j].conj();
            }
        }
        let den = m1.frobenius();
        let num = (conj - m2.entries()).norm();
        Ok(if den == 0.0 { num } else { num / den })
    }
}

/// Pairs `(i, j)` on one axis with separation class `d ∈ [−N/2, N/2)` and
/// doubled midpoint `q`. Ordinary classes use the torus midpoint `2i + d mod 2N`
/// (one pair per node); the Nyquist class keeps the literal midpoint `i + j`,
/// which both orientations share (zero or two pairs).
fn axis_pairs(q: usize, d: i64, n: usize) -> ([(usize, usize); 2], usize) {
    let (n_i, q_i) = (n as i64, q as i64);
    let mut out = [(0, 0); 2];
    if d == -n_i / 2 {
        let mut len = 0;
        for s in [-d, d] {
            let twice_i = q_i - s;
            if twice_i.rem_euclid(2) != 0 {
                continue;
            }
            let i = twice_i / 2;
            let j = i + s;
            if (0..n_i).contains(&i) && (0..n_i).contains(&j) {
                out[len] = (i as usize, j as usize);
                len += 1;
            }
        }
        (out, len)
    } else {
        let i = (q_i - d).rem_euclid(2 * n_i) / 2;
        out[0] = (i as usize, (i + d).rem_euclid(n_i) as usize);
        (out, 1)
    }
}

#[inline]
fn signed_class(r: usize, n: usize) -> i64 {
    if r < n / 2 {
        r as i64
    } else {
        r as i64 - n as i64
    }
}

/// Calls `visit(i, j, r, weight)` for every pair whose doubled midpoint is `q`
/// axis-wise, where `r = (j − i) mod N`; `weight` is 1 over the number of
/// pairs sharing `(q, r)`.
fn for_each_pair<F: FnMut(usize, usize, usize, f64)>(q: &[usize; MAX_DIM], dim: usize, n: usize, mut visit: F) {
    for r in 0..n.pow(dim as u32) {
        visit_class(q, r, dim, n, |i, j, w| visit(i, j, r, w));
    }
}

/// The pairs of a single class `r` at doubled midpoint `q`.
fn visit_class<F: FnMut(usize, usize, f64)>(q: &[usize; MAX_DIM], r: usize, dim: usize, n: usize, mut visit: F) {
    let mut lists = [([(0usize, 0usize); 2], 0usize); MAX_DIM];
    let mut rem = r;
    for a in (0..dim).rev() {
        let d = signed_class(rem % n, n);
        rem /= n;
        if d.rem_euclid(2) as usize != q[a] % 2 {
            return;
        }
        lists[a] = axis_pairs(q[a], d, n);
        if lists[a].1 == 0 {
            return;
        }
    }
    let count: usize = lists[..dim].iter().map(|l| l.1).product();
    let w = 1.0 / count as f64;
    for mut c in 0..count {
        let (mut i, mut j) = (0, 0);
        let mut pick = [0usize; MAX_DIM];
        for a in (0..dim).rev() {
            pick[a] = c % lists[a].1;
            c /= lists[a].1;
        }
        for a in 0..dim {
            let (ia, ja) = lists[a].0[pick[a]];
            i = i * n + ia;
            j = j * n + ja;
        }
        visit(i, j, w);
    }
}

/// Samples of `f` moved to `x + sign·h/2` along the flagged axes.
fn shift_x(f: &SymbolField, fft: &NdFft, mask: [bool; MAX_DIM], sign: f64) -> Vec<Complex64> {
    let total = f.grid().len();
    let cols: Vec<Vec<Complex64>> = (0..total)
        .into_par_iter()
        .map(|k| {
            let mut col: Vec<Complex64> = (0..total).map(|i| f.value(i, k)).collect();
            fft.half_shift(&mut col, mask, sign);
            col
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); total * total];
    for (k, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            out[i * total + k] = *v;
        }
    }
    out
}

fn phase_matrix(grid: &PhaseGrid, a: &VectorPotential) -> Vec<Complex64> {
    let total = grid.len();
    let dim = grid.dim();
    let points: Vec<[f64; MAX_DIM]> = (0..total).map(|i| grid.x_point(i)).collect();
    let upper: Vec<Vec<Complex64>> = (0..total)
        .into_par_iter()
        .map(|i| {
            (i..total)
                .map(|j| Complex64::from_polar(1.0, -circulation(a, &points[i][..dim], &points[j][..dim])))
                .collect()
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); total * total];
    for (i, row) in upper.iter().enumerate() {
        for (off, v) in row.iter().enumerate() {
            let j = i + off;
            out[i * total + j] = *v;
            out[j * total + i] = v.conj();
        }
    }
    out
}

/// `(x, ξ) ↦ p(x, ξ − A(x))`
pub fn nu_pullback(p: &Symbol, a: &VectorPotential) -> Symbol {
    if a.is_zero() {
        return p.clone();
    }
    let dim = p.dim();
    let (p2, a2) = (p.clone(), a.clone());
    let mut s = Symbol::new(dim, format!("{}∘nu[{}]", p.label(), a.label()), move |x, xi| {
        let mut av = [0.0; MAX_DIM];
        a2.eval_into(x, &mut av[..dim]);
        let mut k = [0.0; MAX_DIM];
        for j in 0..dim {
            k[j] = xi[j] - av[j];
        }
        p2.eval(x, &k[..dim])
    });
    if let Some(c) = p.class() {
        s = s.with_class(c);
    }
    s
}

pub fn op_magnetic(f: &SymbolField, a: &VectorPotential) -> Result<OperatorMatrix> {
    Quantizer::new(f.grid(), a)?.magnetic(f)
}

pub fn op_weyl(f: &SymbolField) -> Result<OperatorMatrix> {
    Quantizer::weyl(f.grid()).magnetic(f)
}

pub fn op_minimal(p: &Symbol, grid: &PhaseGrid, a: &VectorPotential) -> Result<OperatorMatrix> {
    Quantizer::new(grid, a)?.minimal(p)
}

pub fn symbol_of(m: &OperatorMatrix, a: &VectorPotential) -> Result<SymbolField> {
    Quantizer::new(m.grid(), a)?.symbol_of(m)
}

pub fn gauge_covariance_residual(
    f: &SymbolField,
    a: &VectorPotential,
    phi: &ScalarPotential,
    scheme: Scheme,
) -> Result<f64> {
    Quantizer::new(f.grid(), a)?.gauge_covariance_residual(f, phi, scheme)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{transversal_gauge, MagneticField, Polynomial};
    use crate::symbols::{gaussian, parse_symbol};

    fn grid() -> PhaseGrid {
        PhaseGrid::new(2, 16, 8.0).unwrap()
    }

    #[test]
    fn unit_symbol_is_identity() {
        let g = grid();
        let one = sample(&parse_symbol("one", 2).unwrap(), &g).unwrap();
        let m = op_weyl(&one).unwrap();
        let id = DMatrix::<Complex64>::identity(g.len(), g.len());
        assert!((m.entries() - id).norm() <= 1e-12);
        let a = transversal_gauge(&MagneticField::constant(2, 0.5));
        let ma = op_magnetic(&one, &a).unwrap();
        let u = GridFunction::wave_packet(&g, &[0.5, -0.5], 0.8, &[0.3, 0.2]).unwrap();
        let v = apply(&ma, &u).unwrap();
        assert!(v.sub(&u).unwrap().norm() / u.norm() <= 1e-10);
    }

    #[test]
    fn momentum_on_plane_wave() {
        let g = grid();
        let xi1 = sample(&parse_symbol("xi:1", 2).unwrap(), &g).unwrap();
        let m = op_weyl(&xi1).unwrap();
        let k = [2.0 * g.xi_spacing(), -g.xi_spacing()];
        let u = GridFunction::from_fn(&g, |x| Complex64::from_polar(1.0, k[0] * x[0] + k[1] * x[1])).unwrap();
        let v = apply(&m, &u).unwrap();
        for (a, b) in v.values().iter().zip(u.values()) {
            assert!((a - b * k[0]).norm() <= 1e-10);
        }
    }

    #[test]
    fn potential_is_diagonal() {
        let g = grid();
        let v = sample(&Symbol::real(2, "V", |x, _| x[0] * x[0] - x[1]), &g).unwrap();
        let m = op_weyl(&v).unwrap();
        for i in 0..g.len() {
            for j in 0..g.len() {
                let want = if i == j {
                    let x = g.x_point(i);
                    x[0] * x[0] - x[1]
                } else {
                    0.0
                };
                assert!((m.entries()[(i, j)] - want).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn weyl_ordering_of_x_xi() {
        // Op(x₁ξ₁) = (Q₁D₁ + D₁Q₁)/2
        let g = grid();
        let q1 = op_weyl(&sample(&parse_symbol("x:1", 2).unwrap(), &g).unwrap()).unwrap();
        let d1 = op_weyl(&sample(&parse_symbol("xi:1", 2).unwrap(), &g).unwrap()).unwrap();
        let prod = sample(&Symbol::real(2, "x1xi1", |x, k| x[0] * k[0]), &g).unwrap();
        let m = op_weyl(&prod).unwrap();
        let anti = (q1.entries() * d1.entries() + d1.entries() * q1.entries()) * Complex64::new(0.5, 0.0);
        // wrapped pairs sit at the torus midpoint, where x₁ is a sawtooth
        let n = g.points_per_axis() as i64;
        for i in 0..g.len() {
            for j in 0..g.len() {
                let (ii, jj) = (g.unravel(i), g.unravel(j));
                if (0..2).all(|a| (jj[a] as i64 - ii[a] as i64).abs() < n / 2) {
                    assert!((m.entries()[(i, j)] - anti[(i, j)]).norm() <= 1e-10 * m.frobenius());
                }
            }
        }
    }

    #[test]
    fn zero_potential_schemes_coincide() {
        let g = grid();
        let p = parse_symbol("cubic:1,2,1", 2).unwrap();
        let f = sample(&p, &g).unwrap();
        let zero = VectorPotential::zero(2);
        let a = op_magnetic(&f, &zero).unwrap();
        let b = op_weyl(&f).unwrap();
        let c = op_minimal(&p, &g, &zero).unwrap();
        assert_eq!(a.entries(), b.entries());
        assert_eq!(a.entries(), c.entries());
    }

    #[test]
    fn real_symbol_gives_hermitian_matrix() {
        let g = grid();
        let a = transversal_gauge(&MagneticField::planar(2, "p", |x| 0.5 + 0.1 * x[0].sin()));
        let f = sample(&parse_symbol("bracket:1", 2).unwrap(), &g).unwrap();
        assert!(op_magnetic(&f, &a).unwrap().hermiticity_defect() <= 1e-12);
        assert!(op_magnetic(&f.detached(), &a).unwrap().hermiticity_defect() <= 1e-12);
    }

    #[test]
    fn symbol_of_identity_and_momentum() {
        let g = grid();
        let zero = VectorPotential::zero(2);
        let id = OperatorMatrix::identity(&g, Scheme::Weyl, "zero");
        let f = symbol_of(&id, &zero).unwrap();
        assert!(f.values().iter().all(|v| (v - 1.0).norm() <= 1e-10));

        let xi1 = sample(&parse_symbol("xi:1", 2).unwrap(), &g).unwrap();
        let back = symbol_of(&op_weyl(&xi1).unwrap(), &zero).unwrap();
        let err = back.max_diff_where(&xi1, |i, _| g.is_interior(i)).unwrap();
        assert!(err <= 1e-8, "{err}");
    }

    #[test]
    fn symbol_of_rejects_wrong_potential() {
        let g = grid();
        let a = transversal_gauge(&MagneticField::constant(2, 0.5));
        let f = sample(&parse_symbol("xi:1", 2).unwrap(), &g).unwrap();
        let m = op_magnetic(&f, &a).unwrap();
        let other = transversal_gauge(&MagneticField::constant(2, 0.25));
        assert!(matches!(symbol_of(&m, &other), Err(Error::SchemeMismatch(_))));
        assert!(symbol_of(&m, &a).is_ok());
    }

    #[test]
    fn gaussian_round_trip_on_fine_grid() {
        let g = PhaseGrid::new(2, 32, 8.0).unwrap();
        let a = transversal_gauge(&MagneticField::constant(2, 0.5));
        let f = sample(&gaussian(&[0.5, -0.5], 1.0, &[0.3, 0.0], 1.0), &g).unwrap();
        let back = symbol_of(&op_magnetic(&f, &a).unwrap(), &a).unwrap();
        let err = back.relative_l2_error(&f).unwrap();
        assert!(err <= 1e-6, "{err}");
    }

    #[test]
    fn sampled_and_closure_quantizations_agree_for_band_limited_x() {
        let g = grid();
        let s = Symbol::real(2, "c", |x, k| (0.4 * x[0]).cos() * k[1]);
        let f = sample(&s, &g).unwrap();
        let a = op_weyl(&f).unwrap();
        let b = op_weyl(&f.detached()).unwrap();
        assert!(a.relative_difference(&b).unwrap() <= 1e-10);
    }

    #[test]
    fn constant_gauge_function_cancels() {
        let g = grid();
        let a = transversal_gauge(&MagneticField::constant(2, 0.5));
        let f = sample(&parse_symbol("cubic:1,2,1", 2).unwrap(), &g).unwrap();
        let phi = ScalarPotential::from_polynomial(Polynomial::new(2, vec![(vec![0, 0], 0.7)]));
        let r = gauge_covariance_residual(&f, &a, &phi, Scheme::Magnetic).unwrap();
        assert!(r <= 1e-14, "{r}");
    }
}
