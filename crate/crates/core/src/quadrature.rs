//! Gauss–Legendre rules.
//!
//! Nodes are stored on [-1, 1] in ascending order and are exactly
//! antisymmetric (`t[q-1-i] == -t[i]` bitwise), with exactly symmetric
//! weights. Integrals over segments are summed in mirrored pairs so that
//! reversing a segment negates the result bit for bit.

use std::f64::consts::PI;

#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Default order for segment and triangle integrals.
pub const DEFAULT_ORDER: usize = 16;

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let half = order / 2;
        for i in 0..half {
            // Newton on P_order starting from the Tricomi estimate of the
            // i-th largest root.
            let mut t = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(order, t);
                dp = d;
                let step = p / d;
                t -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_and_derivative(order, t);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - t * t) * dp * dp);
            nodes[order - 1 - i] = t;
            nodes[i] = -t;
            weights[order - 1 - i] = w;
            weights[i] = w;
        }
        if order % 2 == 1 {
            let (_, d) = legendre_and_derivative(order, 0.0);
            nodes[half] = 0.0;
            weights[half] = 2.0 / (d * d);
        }
        GaussLegendre { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped to [0, 1].
    pub fn unit_interval(&self) -> Vec<(f64, f64)> {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| (0.5 * (t + 1.0), 0.5 * w))
            .collect()
    }

    /// ∫_{-1}^{1} g(t) dt, summed over mirrored node pairs.
    pub fn integrate_symmetric<F: FnMut(f64) -> f64>(&self, mut g: F) -> f64 {
        let q = self.order();
        let mut acc = 0.0;
        for i in 0..q / 2 {
            let pair = g(self.nodes[i]) + g(self.nodes[q - 1 - i]);
            acc += self.weights[i] * pair;
        }
        if q % 2 == 1 {
            acc += self.weights[q / 2] * g(0.0);
        }
        acc
    }

    /// ∫_a^b g(s) ds.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut g: F) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        half * self.integrate_symmetric(|t| g(mid + half * t))
    }
}

impl Default for GaussLegendre {
    fn default() -> Self {
        GaussLegendre::new(DEFAULT_ORDER)
    }
}

fn legendre_and_derivative(order: usize, t: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = t;
    for k in 2..=order {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if order == 0 { 1.0 } else { p1 };
    let dp = if order == 0 {
        0.0
    } else {
        order as f64 * (t * p1 - p0) / (t * t - 1.0)
    };
    (p, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for q in 1..=24 {
            let rule = GaussLegendre::new(q);
            let s: f64 = rule.weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "order {q}: {s}");
        }
    }

    #[test]
    fn exact_for_degree_two_q_minus_one() {
        let rule = GaussLegendre::new(16);
        for deg in 0..32 {
            let got = rule.integrate(0.0, 1.0, |s| s.powi(deg));
            let want = 1.0 / (deg as f64 + 1.0);
            assert!((got - want).abs() < 1e-14, "deg {deg}: {got} vs {want}");
        }
    }

    #[test]
    fn nodes_are_mirrored_bitwise() {
        for q in [3, 8, 15, 16] {
            let rule = GaussLegendre::new(q);
            let t = rule.nodes();
            let w = rule.weights();
            for i in 0..q {
                assert_eq!(t[q - 1 - i], -t[i]);
                assert_eq!(w[q - 1 - i], w[i]);
            }
            assert!(t.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn known_two_point_rule() {
        let rule = GaussLegendre::new(2);
        assert!((rule.nodes()[1] - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((rule.weights()[0] - 1.0).abs() < 1e-15);
    }
}
