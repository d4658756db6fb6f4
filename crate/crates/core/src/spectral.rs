//! Eigenvalues, semiboundedness, magnetic Sobolev norms and fractional powers.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fft::NdFft;
use crate::fields::VectorPotential;
use crate::grid::{GridFunction, PhaseGrid};
use crate::quantize::{apply, op_magnetic, op_minimal, symbol_of, OperatorMatrix};
use crate::symbols::{bracket, kinetic, sample, Symbol, SymbolField};

/// Largest Hermiticity defect accepted before an eigensolve.
pub const HERMITIAN_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    /// ascending
    pub eigenvalues: Vec<f64>,
    pub hermiticity_defect: f64,
    pub min_eig: f64,
    /// Number of nodes kept by the interior compression, if any.
    pub interior_rank: Option<usize>,
    pub grid: PhaseGrid,
}

fn check_hermitian(m: &OperatorMatrix) -> Result<f64> {
    let defect = m.hermiticity_defect();
    if defect > HERMITIAN_THRESHOLD || !defect.is_finite() {
        return Err(Error::NotHermitian {
            defect,
            threshold: HERMITIAN_THRESHOLD,
        });
    }
    Ok(defect)
}

fn symmetrized(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()).scale(0.5)
}

/// `P M P` restricted to the middle-half nodes.
pub fn interior_block(m: &OperatorMatrix) -> DMatrix<Complex64> {
    let idx = m.grid().interior_indices();
    let e = m.entries();
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| e[(idx[r], idx[c])])
}

fn sorted_eigenvalues(h: DMatrix<Complex64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn spectrum(m: &OperatorMatrix, interior_only: bool) -> Result<SpectrumReport> {
    let defect = check_hermitian(m)?;
    let (h, rank) = if interior_only {
        let b = interior_block(m);
        let r = b.nrows();
        (symmetrized(&b), Some(r))
    } else {
        (symmetrized(m.entries()), None)
    };
    let eigenvalues = sorted_eigenvalues(h);
    Ok(SpectrumReport {
        min_eig: eigenvalues[0],
        eigenvalues,
        hermiticity_defect: defect,
        interior_rank: rank,
        grid: m.grid().clone(),
    })
}

/// Spectral norm (largest singular value) of the interior compression.
pub fn interior_operator_norm(m: &OperatorMatrix) -> f64 {
    interior_block(m).singular_values().max()
}

#[derive(Clone, Debug, Serialize)]
pub struct GardingReport {
    /// `(N, min interior eigenvalue)`
    pub min_eigs: Vec<(usize, f64)>,
    /// `min Re p / |ξ|^m` over `|ξ| ≥ R` on the finest grid.
    pub ellipticity: f64,
    /// Smallest of the minimum eigenvalues: the observed `−C₁`.
    pub lower_bound: f64,
    /// The minimum eigenvalue does not drift down by more than `tolerance`
    /// between successive refinements.
    pub non_diverging: bool,
    pub tolerance: f64,
}

/// Semiboundedness trend of `Op^A(p)` over a sequence of grids.
pub fn garding_check(
    p: &Symbol,
    m: f64,
    a: &VectorPotential,
    sizes: &[usize],
    half_width: f64,
    r: f64,
) -> Result<GardingReport> {
    if sizes.is_empty() {
        return Err(Error::bad_params("garding", "no grid sizes"));
    }
    let dim = p.dim();
    let finest = *sizes.iter().max().expect("non-empty");
    let grid = PhaseGrid::new(dim, finest, half_width)?;
    let mut ell = f64::INFINITY;
    for i in 0..grid.len() {
        let x = grid.x_point(i);
        for k in 0..grid.len() {
            let xi = grid.xi_point(k);
            let norm = xi[..dim].iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm >= r {
                ell = ell.min(p.eval(&x[..dim], &xi[..dim]).re / norm.powf(m));
            }
        }
    }
    if !(ell.is_finite() && ell > 0.0) {
        return Err(Error::NotElliptic(ell));
    }
    let mut min_eigs = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let g = PhaseGrid::new(dim, n, half_width)?;
        let op = op_magnetic(&sample(p, &g)?, a)?;
        min_eigs.push((n, spectrum(&op, true)?.min_eig));
    }
    let tolerance = 0.05;
    let non_diverging = min_eigs.windows(2).all(|w| w[1].1 >= w[0].1 - tolerance);
    let lower_bound = min_eigs.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
    Ok(GardingReport {
        min_eigs,
        ellipticity: ell,
        lower_bound,
        non_diverging,
        tolerance,
    })
}

/// `(‖𝔓_s u‖² + ‖u‖²)^{1/2}`, `𝔓_s = Op^A(⟨ξ⟩^s)`.
pub fn sobolev_norm(u: &GridFunction, s: f64, a: &VectorPotential) -> Result<f64> {
    if s < 0.0 || !s.is_finite() {
        return Err(Error::NegativeOrder(s));
    }
    let grid = u.grid();
    let ps = op_magnetic(&sample(&bracket(grid.dim(), s), grid)?, a)?;
    let v = apply(&ps, u)?;
    Ok((v.norm().powi(2) + u.norm().powi(2)).sqrt())
}

/// `(‖u‖² + Σ_j ‖(D_j − A_j)u‖²)^{1/2}` with `D_j` as an FFT multiplier.
pub fn magnetic_derivative_norm(u: &GridFunction, a: &VectorPotential) -> Result<f64> {
    let grid = u.grid();
    let dim = grid.dim();
    let n = grid.points_per_axis();
    let fft = NdFft::new(n, dim);
    let mut spec = u.values().to_vec();
    fft.forward(&mut spec);
    let scale = 1.0 / grid.len() as f64;
    let mut total = u.norm().powi(2);
    for j in 0..dim {
        let mut d = spec.clone();
        for (flat, v) in d.iter_mut().enumerate() {
            let s = grid.unravel(flat)[j];
            let k = if 2 * s < n {
                s as f64
            } else if 2 * s == n {
                0.0
            } else {
                s as f64 - n as f64
            };
            *v *= k * grid.xi_spacing() * scale;
        }
        fft.inverse(&mut d);
        for (i, v) in d.iter_mut().enumerate() {
            *v -= a.component(j, &grid.x_point(i)[..dim]) * u.values()[i];
        }
        total += grid.cell_volume() * d.iter().map(|v| v.norm_sqr()).sum::<f64>();
    }
    Ok(total.sqrt())
}

#[derive(Clone, Debug)]
pub struct FractionalPower {
    pub matrix: OperatorMatrix,
    /// Added to the spectrum before taking powers (0 when `min eig ≥ 1`).
    pub shift: f64,
    pub min_eig: f64,
}

/// `M^s` through the eigendecomposition of the Hermitian part, `s ∈ [−1, 1]`.
pub fn fractional_power(m: &OperatorMatrix, s: f64) -> Result<FractionalPower> {
    if !(-1.0..=1.0).contains(&s) {
        return Err(Error::PowerOutOfRange(s));
    }
    check_hermitian(m)?;
    let eig = SymmetricEigen::new(symmetrized(m.entries()));
    let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let shift = if min_eig < 1.0 { 1.0 - min_eig } else { 0.0 };
    let powered = eig.eigenvalues.map(|l| Complex64::new((l + shift).powf(s), 0.0));
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (c, p) in powered.iter().enumerate() {
        scaled.column_mut(c).scale_mut(p.re);
    }
    Ok(FractionalPower {
        matrix: m.with_entries(scaled * v.adjoint()),
        shift,
        min_eig,
    })
}

/// `max |σ(M^s) − p^s| / |p^s|` over `{|ξ| ≥ ξ_min, interior x}`.
pub fn principal_symbol_check(
    m: &OperatorMatrix,
    s: f64,
    p: &SymbolField,
    a: &VectorPotential,
    xi_min: f64,
) -> Result<f64> {
    let ms = fractional_power(m, s)?;
    let sym = symbol_of(&ms.matrix, a)?;
    Ok(relative_deviation(&sym, p, s, xi_min))
}

pub(crate) fn relative_deviation(sym: &SymbolField, p: &SymbolField, s: f64, xi_min: f64) -> f64 {
    let grid = p.grid();
    let dim = grid.dim();
    let n = grid.len();
    let mut worst = 0.0f64;
    for i in grid.interior_indices() {
        for k in 0..n {
            let xi = grid.xi_point(k);
            if xi[..dim].iter().map(|v| v * v).sum::<f64>().sqrt() < xi_min {
                continue;
            }
            let want = p.value(i, k).powf(s);
            worst = worst.max((sym.value(i, k) - want).norm() / want.norm());
        }
    }
    worst
}

/// `Op^A(⟨ξ⟩)`, `Op_A(⟨ξ⟩)` and `(Op^A(|ξ|²) + 1)^{1/2}`.
pub fn relativistic_triple(grid: &PhaseGrid, a: &VectorPotential) -> Result<[OperatorMatrix; 3]> {
    let dim = grid.dim();
    let jap = bracket(dim, 1.0);
    let h1 = op_magnetic(&sample(&jap, grid)?, a)?;
    let h2 = op_minimal(&jap, grid, a)?;
    let k = op_magnetic(&sample(&kinetic(dim), grid)?, a)?;
    let id = OperatorMatrix::identity(grid, k.scheme(), k.potential());
    let h3 = fractional_power(&k.add(&id)?, 0.5)?.matrix;
    for h in [&h1, &h2, &h3] {
        check_hermitian(h)?;
    }
    Ok([h1, h2, h3])
}
