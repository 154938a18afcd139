//! Gauss-Legendre rules.

use crate::error::{Error, Result};

/// Gauss-Legendre rule on the reference interval `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// `n`-point Gauss-Legendre rule, exact for polynomials of degree `2n - 1`.
///
/// Nodes are the roots of the Legendre polynomial `P_n`, found by Newton
/// iteration from the Chebyshev-like initial guess and mirrored so that the
/// rule is exactly symmetric.
pub fn gauss_points(n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::ZeroPoints);
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, x);
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
    Ok(QuadratureRule { nodes, weights })
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn exactness_degree(&self) -> usize {
        2 * self.len() - 1
    }

    /// Affine image of the rule on `(a, b)` as `(node, weight)` pairs.
    pub fn map_to_segment(&self, a: f64, b: f64) -> Result<Vec<(f64, f64)>> {
        if !(a < b) {
            return Err(Error::DegenerateSegment { a, b });
        }
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        Ok(self.nodes.iter().zip(&self.weights).map(|(x, w)| (mid + half * x, half * w)).collect())
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
        Ok(self.map_to_segment(a, b)?.into_iter().map(|(x, w)| w * f(x)).sum())
    }

    /// Tensor-product rule on the rectangle `(x0, x1) x (t0, t1)` as `(x, t, weight)`.
    pub fn tensor(&self, other: &QuadratureRule, x0: f64, x1: f64, t0: f64, t1: f64) -> Result<Vec<(f64, f64, f64)>> {
        let xs = self.map_to_segment(x0, x1)?;
        let ts = other.map_to_segment(t0, t1)?;
        Ok(ts.iter().flat_map(|&(t, wt)| xs.iter().map(move |&(x, wx)| (x, t, wx * wt))).collect())
    }
}

/// Points for polynomial-by-polynomial face terms of degree up to `2 p_max`.
pub fn face_points(p_max: usize) -> usize {
    p_max + 2
}

/// Points for any integral involving non-polynomial data.
pub fn data_points(p_max: usize) -> usize {
    (p_max + 2).max(12)
}

/// Points per direction for error integrals against an exact solution.
pub fn error_points(p_max: usize) -> usize {
    p_max + 6
}

/// Smallest number of points integrating degree `degree` exactly.
pub fn points_for_degree(degree: usize) -> usize {
    degree / 2 + 1
}
