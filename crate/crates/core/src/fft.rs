//! Separable FFTs on `[N; dim]` row-major blocks.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::fields::MAX_DIM;

#[derive(Clone)]
pub struct NdFft {
    n: usize,
    dim: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl NdFft {
    pub fn new(n: usize, dim: usize) -> Self {
        let mut planner = FftPlanner::new();
        NdFft {
            n,
            dim,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Unnormalized transform along every axis.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.transform_axes(buf, [true; MAX_DIM], false);
    }

    /// Unnormalized inverse along every axis.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.transform_axes(buf, [true; MAX_DIM], true);
    }

    pub fn transform_axes(&self, buf: &mut [Complex64], axes: [bool; MAX_DIM], inverse: bool) {
        debug_assert_eq!(buf.len(), self.len());
        let plan = if inverse { &self.inv } else { &self.fwd };
        let n = self.n;
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        for a in 0..self.dim {
            if !axes[a] {
                continue;
            }
            let stride = n.pow((self.dim - 1 - a) as u32);
            if stride == 1 {
                plan.process_with_scratch(buf, &mut scratch);
                continue;
            }
            let block = stride * n;
            for outer in (0..buf.len()).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (t, v) in line.iter_mut().enumerate() {
                        *v = buf[base + t * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (t, v) in line.iter().enumerate() {
                        buf[base + t * stride] = *v;
                    }
                }
            }
        }
    }

    /// Trigonometric resampling at offset `sign·h/2` along the flagged axes
    /// (periodic). The Nyquist mode is split evenly, i.e. multiplied by
    /// `cos(π/2) = 0`, which keeps real data real.
    pub fn half_shift(&self, buf: &mut [Complex64], axes: [bool; MAX_DIM], sign: f64) {
        if !axes[..self.dim].iter().any(|&b| b) {
            return;
        }
        let n = self.n;
        self.transform_axes(buf, axes, false);
        let phases: Vec<Complex64> = (0..n)
            .map(|j| {
                if 2 * j == n {
                    Complex64::new(0.0, 0.0)
                } else {
                    let s = if 2 * j < n { j as f64 } else { j as f64 - n as f64 };
                    Complex64::from_polar(1.0, sign * PI * s / n as f64)
                }
            })
            .collect();
        let count = axes[..self.dim].iter().filter(|&&b| b).count();
        let norm = 1.0 / (n.pow(count as u32) as f64);
        for (flat, v) in buf.iter_mut().enumerate() {
            let mut rest = flat;
            let mut factor = Complex64::new(norm, 0.0);
            for a in (0..self.dim).rev() {
                let j = rest % n;
                rest /= n;
                if axes[a] {
                    factor *= phases[j];
                }
            }
            *v *= factor;
        }
        self.transform_axes(buf, axes, true);
    }
}

/// `(−1)^{Σ r_a}` for a flat multi-index on `[N; dim]`.
#[inline]
pub fn checker_sign(mut flat: usize, n: usize, dim: usize) -> f64 {
    let mut s = 0;
    for _ in 0..dim {
        s += flat % n;
        flat /= n;
    }
    if s % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}
