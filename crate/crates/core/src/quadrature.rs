//! Gauss-Legendre rules and composite panel integration.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::{Error, Result};

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        // Newton iteration from the Chebyshev-like initial guess.
        let mut x = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
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
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
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
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Composite Gauss-Legendre integration of `f` over `[a, b]` with the panel
/// count doubled until the relative change drops below `rel_tol`.
#[derive(Debug, Clone)]
pub struct PanelDoubling {
    pub order: usize,
    pub rel_tol: f64,
    pub min_level: u32,
    pub max_level: u32,
}

impl Default for PanelDoubling {
    fn default() -> Self {
        Self {
            order: 8,
            rel_tol: 1e-6,
            min_level: 2,
            max_level: 14,
        }
    }
}

impl PanelDoubling {
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> Result<f64> {
        let (nodes, weights) = gauss_legendre(self.order);
        let mut previous: Option<f64> = None;
        for level in self.min_level..=self.max_level {
            let panels = 1usize << level;
            let h = (b - a) / panels as f64;
            let mut total = 0.0;
            for k in 0..panels {
                let left = a + k as f64 * h;
                let mid = left + 0.5 * h;
                let mut s = 0.0;
                for (x, w) in nodes.iter().zip(&weights) {
                    s += w * f(mid + 0.5 * h * x);
                }
                total += 0.5 * h * s;
            }
            if let Some(prev) = previous {
                let scale = total.abs().max(prev.abs());
                if (total - prev).abs() <= self.rel_tol * scale || scale == 0.0 {
                    return Ok(total);
                }
            }
            previous = Some(total);
        }
        Err(Error::QuadratureNonconvergence(self.rel_tol))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(6);
        // exact through degree 11
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((integral - 2.0 / 11.0).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn panels_converge_on_exponential() {
        let q = PanelDoubling::default();
        let v = q.integrate(0.0, 3.0, |t| libm::exp(-2.0 * t)).unwrap();
        assert!((v - (1.0 - libm::exp(-6.0)) / 2.0).abs() < 1e-12);
    }
}
