//! Composite Gauss–Legendre quadrature on a finite interval.

use serde::{Deserialize, Serialize};

/// Description of a composite Gauss–Legendre rule: `[lower, upper]` is split
/// into equal panels, each carrying `order` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub lower: f64,
    pub upper: f64,
    pub panels: usize,
    pub order: usize,
}

impl QuadSpec {
    /// Builds a rule with roughly `density` nodes per unit length, using
    /// panels of `order` nodes.
    pub fn with_density(lower: f64, upper: f64, density: f64, order: usize) -> Self {
        let len = upper - lower;
        let panels = ((len * density) / order as f64).ceil().max(1.0) as usize;
        Self {
            lower,
            upper,
            panels,
            order,
        }
    }

    /// The same interval with twice as many panels.
    pub fn refined(&self) -> Self {
        Self {
            panels: self.panels * 2,
            ..*self
        }
    }

    pub fn len(&self) -> usize {
        self.panels * self.order
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Nodes and weights in panel order.
    pub fn nodes_weights(&self) -> (Vec<f64>, Vec<f64>) {
        let (ref_nodes, ref_weights) = gauss_legendre(self.order);
        let width = (self.upper - self.lower) / self.panels as f64;
        let mut nodes = Vec::with_capacity(self.len());
        let mut weights = Vec::with_capacity(self.len());
        for panel in 0..self.panels {
            let mid = self.lower + (panel as f64 + 0.5) * width;
            for (t, w) in ref_nodes.iter().zip(&ref_weights) {
                nodes.push(mid + 0.5 * width * t);
                weights.push(0.5 * width * w);
            }
        }
        (nodes, weights)
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order > 0, "Gauss-Legendre order must be positive");
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, refined by Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
