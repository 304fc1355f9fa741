//! Gauss–Legendre rules and node-doubling error control.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on `P_n` from Chebyshev-like initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
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
            nodes[i] = x;
            nodes[n - 1 - i] = -x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared cached rule.
    pub fn cached(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard.entry(n).or_insert_with(|| Arc::new(GaussLegendre::new(n))).clone()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn on_interval(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&t, &w)| (mid + half * t, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.on_interval(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Node count, tolerance and doubling budget for one-dimensional integrals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub nodes: usize,
    pub tol: f64,
    pub max_doublings: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { nodes: 256, tol: 1e-12, max_doublings: 4 }
    }
}

/// Value with a node-doubling error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub err_est: f64,
    pub nodes: usize,
}

/// Integrates `f` over `[a, b]` at `n` and `2n` nodes, doubling until the two agree to `tol`.
/// The tolerance is relative to `max(1, |value|)`.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(a: f64, b: f64, spec: &QuadratureSpec, f: F) -> Result<Estimate> {
    let mut n = spec.nodes.max(2);
    let mut prev = GaussLegendre::cached(n).integrate(a, b, &f);
    for _ in 0..=spec.max_doublings {
        let next = GaussLegendre::cached(2 * n).integrate(a, b, &f);
        let err = (next - prev).abs();
        if err <= spec.tol * next.abs().max(1.0) {
            return Ok(Estimate { value: next, err_est: err, nodes: 2 * n });
        }
        prev = next;
        n *= 2;
    }
    Err(Error::NumericalFailure(format!(
        "quadrature on [{a}, {b}] did not reach tolerance {} with {} nodes",
        spec.tol, n
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exactness() {
        let gl = GaussLegendre::new(5);
        // degree 9 is integrated exactly by 5 nodes
        let v = gl.integrate(-1.0, 1.0, |x| x.powi(8) + x.powi(9));
        assert!((v - 2.0 / 9.0).abs() < 1e-15);
        let w: f64 = gl.weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn large_rule_is_accurate() {
        let gl = GaussLegendre::new(512);
        let v = gl.integrate(0.0, PI, |t| t.sin());
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn adaptive_reports_failure() {
        let spec = QuadratureSpec { nodes: 2, tol: 1e-300, max_doublings: 1 };
        assert!(integrate_adaptive(0.0, 1.0, &spec, |x| (50.0 * x).sin()).is_err());
    }
}
