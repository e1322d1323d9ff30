//! Gauss–Legendre rules and a panel builder for oscillatory phase integrands.

use std::f64::consts::PI;

/// An `n`-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on `P_n` from the Chebyshev-like initial guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    let (_, d) = legendre_with_derivative(n, x);
                    dp = d;
                    break;
                }
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
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Splits `[0, end]` into panels whose accumulated phase stays below `budget`.
///
/// `rate(x)` bounds the local angular frequency of the integrand and must be
/// non-decreasing in `x`. Panels are built from `end` inward, so they shrink
/// toward the edge where the rate is largest. `edge_gap` is the distance from
/// `end` to the nearest singularity of the integrand (infinite if none); each
/// panel is also kept no wider than its distance to that singularity.
///
/// Returns `None` when more than `max_panels` panels would be required.
pub(crate) fn graded_panels<R: Fn(f64) -> f64>(
    end: f64,
    edge_gap: f64,
    budget: f64,
    rate: R,
    max_panels: usize,
) -> Option<Vec<(f64, f64)>> {
    let mut panels = Vec::new();
    let mut right = end;
    while right > 0.0 {
        if panels.len() >= max_panels {
            return None;
        }
        let omega = rate(right);
        if !omega.is_finite() {
            return None;
        }
        let mut h = if omega > 0.0 { budget / omega } else { right };
        let gap = edge_gap + (end - right);
        h = h.min(gap).min(right);
        if !(h > 0.0) || h < right * 1e-15 {
            return None;
        }
        let left = if right - h <= right * 1e-12 {
            0.0
        } else {
            right - h
        };
        panels.push((left, right));
        right = left;
    }
    panels.reverse();
    Some(panels)
}
