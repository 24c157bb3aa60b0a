//! Uniform grids on `[-1, 1]` and the quadrature rules used on them.
//!
//! Every integral the pipeline evaluates on sampled data uses composite
//! Simpson weights on the uniform grid. Gauss-Legendre rules are kept for
//! module-internal verification of the PSWF basis.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// `N` equispaced nodes on `[-1, 1]` including both endpoints, `N` odd.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniformInterval {
    n_points: usize,
}

impl UniformInterval {
    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < 3 || n_points.is_multiple_of(2) {
            return Err(invalid(format!(
                "grid size must be odd and at least 3, got {n_points}"
            )));
        }
        Ok(Self { n_points })
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node spacing `2 / (N - 1)`.
    pub fn step(&self) -> f64 {
        2.0 / (self.n_points - 1) as f64
    }

    /// Node `k`, computed as `(2k - (N-1)) / (N-1)` so that the grid is
    /// exactly antisymmetric in floating point and contains `0`.
    pub fn node(&self, k: usize) -> f64 {
        let m = (self.n_points - 1) as f64;
        (2.0 * k as f64 - m) / m
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.node(k)).collect()
    }

    /// Composite Simpson weights for `[-1, 1]`.
    pub fn weights(&self) -> Vec<f64> {
        simpson_weights(self.n_points, self.step())
    }

    /// Index of the node `0`.
    pub fn center(&self) -> usize {
        (self.n_points - 1) / 2
    }
}

/// Composite Simpson weights for `n` nodes (odd) with spacing `h`.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    debug_assert!(n % 2 == 1 && n >= 3);
    (0..n)
        .map(|k| {
            let m = if k == 0 || k == n - 1 {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            m * h / 3.0
        })
        .collect()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess for the i-th largest root.
        let theta = std::f64::consts::PI * (4.0 * i as f64 + 3.0) / (4.0 * nf + 2.0);
        let mut x = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * theta.cos();
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
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
