//! Phase-space lattice and state vectors.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::MAX_DIM;

/// Box `[−L, L)ⁿ` with `N` nodes per axis and its dual frequency lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    dim: usize,
    points_per_axis: usize,
    half_width: f64,
}

impl PhaseGrid {
    /// `N` must be even and at least 4. Powers of two are the CLI's
    /// business; the library accepts any even `N`.
    pub fn new(dim: usize, points_per_axis: usize, half_width: f64) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if points_per_axis < 4 || points_per_axis % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and ≥ 4, got {points_per_axis}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half width {half_width} must be positive")));
        }
        Ok(PhaseGrid {
            dim,
            points_per_axis,
            half_width,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// `h = 2L/N`
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    /// `π/L`
    pub fn xi_spacing(&self) -> f64 {
        PI / self.half_width
    }

    /// `πN/(2L)`
    pub fn nyquist_radius(&self) -> f64 {
        PI * self.points_per_axis as f64 / (2.0 * self.half_width)
    }

    /// Number of nodes in x (equal to the number in ξ).
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element `hⁿ`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    #[inline]
    pub fn x_coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    #[inline]
    pub fn xi_coord(&self, k: usize) -> f64 {
        (k as f64 - (self.points_per_axis / 2) as f64) * self.xi_spacing()
    }

    /// Row-major multi-index, last axis fastest.
    #[inline]
    pub fn unravel(&self, mut flat: usize) -> [usize; MAX_DIM] {
        let n = self.points_per_axis;
        let mut idx = [0; MAX_DIM];
        for a in (0..self.dim).rev() {
            idx[a] = flat % n;
            flat /= n;
        }
        idx
    }

    #[inline]
    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx[..self.dim]
            .iter()
            .fold(0, |acc, &i| acc * self.points_per_axis + i)
    }

    #[inline]
    pub fn x_point(&self, flat: usize) -> [f64; MAX_DIM] {
        let idx = self.unravel(flat);
        let mut p = [0.0; MAX_DIM];
        for a in 0..self.dim {
            p[a] = self.x_coord(idx[a]);
        }
        p
    }

    #[inline]
    pub fn xi_point(&self, flat: usize) -> [f64; MAX_DIM] {
        let idx = self.unravel(flat);
        let mut p = [0.0; MAX_DIM];
        for a in 0..self.dim {
            p[a] = self.xi_coord(idx[a]);
        }
        p
    }

    /// Node lies in the middle half `[−L/2, L/2)` on every axis.
    pub fn is_interior(&self, flat: usize) -> bool {
        let idx = self.unravel(flat);
        let (lo, hi) = (self.points_per_axis / 4, 3 * self.points_per_axis / 4);
        idx[..self.dim].iter().all(|&i| i >= lo && i < hi)
    }

    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&f| self.is_interior(f)).collect()
    }

    pub fn same_as(&self, other: &PhaseGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// State vector on the x-lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: PhaseGrid,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: PhaseGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                value: values[i].to_string(),
                x_node: grid.unravel(i)[..grid.dim()].to_vec(),
                xi_node: vec![],
            });
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn<F: Fn(&[f64]) -> Complex64>(grid: &PhaseGrid, f: F) -> Result<Self> {
        let dim = grid.dim();
        let values = (0..grid.len())
            .map(|i| f(&grid.x_point(i)[..dim]))
            .collect();
        GridFunction::new(grid.clone(), values)
    }

    /// Normalized Gaussian wave packet `exp(−|x−c|²/(2w²) + i⟨k,x⟩)`.
    pub fn wave_packet(grid: &PhaseGrid, center: &[f64], width: f64, k: &[f64]) -> Result<Self> {
        let mut u = GridFunction::from_fn(grid, |x| {
            let mut r2 = 0.0;
            let mut phase = 0.0;
            for a in 0..x.len() {
                r2 += (x[a] - center[a]).powi(2);
                phase += k[a] * x[a];
            }
            Complex64::from_polar((-r2 / (2.0 * width * width)).exp(), phase)
        })?;
        let n = u.norm();
        if n > 0.0 {
            u.values.iter_mut().for_each(|v| *v /= n);
        }
        Ok(u)
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// `(hⁿ Σ |u|²)^{1/2}`
    pub fn norm(&self) -> f64 {
        (self.grid.cell_volume() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Fraction of `‖u‖²` carried by middle-half nodes.
    pub fn interior_mass(&self) -> f64 {
        let total: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 1.0;
        }
        let inner: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.is_interior(*i))
            .map(|(_, v)| v.norm_sqr())
            .sum();
        inner / total
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.grid.same_as(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(GridFunction {
            grid: self.grid.clone(),
            values,
        })
    }
}
