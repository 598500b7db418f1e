//! Quadrature rules and exact exponential-weight integrals.

use alloc::vec::Vec;
use core::f64::consts::PI;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            nodes.push(x);
            weights.push(2.0 / ((1.0 - x * x) * dp * dp));
        }
        Self { nodes, weights }
    }

    /// Composite rule over `[a, b]` split into `panels` equal pieces.
    pub fn integrate<T, F>(&self, a: f64, b: f64, panels: usize, mut f: F) -> T
    where
        T: core::ops::Add<Output = T> + core::ops::Mul<f64, Output = T> + Default,
        F: FnMut(f64) -> T,
    {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut acc = T::default();
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                acc = acc + f(mid + 0.5 * h * x) * (0.5 * h * w);
            }
        }
        acc
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
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

/// Weights `(w0, w1)` with
/// `∫_0^h e^{-λ(h-u)} (f0 + (f1-f0) u/h) du = w0 f0 + w1 f1`, exact for `λ ≥ 0`.
pub fn exp_linear_weights(lambda: f64, h: f64) -> (f64, f64) {
    let x = lambda * h;
    if x < 0.5 {
        // Alternating series in x to avoid cancellation.
        let mut total = 0.0;
        let mut w0 = 0.0;
        let mut term = 1.0;
        for n in 0..24 {
            let nf = n as f64;
            term /= nf + 1.0;
            total += term;
            w0 += term * (nf + 1.0) / (nf + 2.0);
            term *= -x;
        }
        return (h * w0, h * (total - w0));
    }
    let e = libm::exp(-x);
    let total = h * (-libm::expm1(-x)) / x;
    let w0 = h * (1.0 - e * (1.0 + x)) / (x * x);
    (w0, total - w0)
}

/// Trapezoid rule on uniformly spaced samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let gl = GaussLegendre::new(16);
        let v: f64 = gl.integrate(0.0, 2.0, 1, |x| x.powi(31));
        assert!((v - 2f64.powi(32) / 32.0).abs() / v < 1e-13);
        let w: f64 = gl.integrate(-1.0, 1.0, 1, |_| 1.0);
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn exp_weights_match_direct_quadrature() {
        let gl = GaussLegendre::new(16);
        for &(lam, h) in &[
            (1.0, 1e-3),
            (2.0, 0.1),
            (50.0, 0.01),
            (1.0, 1e-6),
            (0.0, 0.5),
        ] {
            let (w0, w1) = exp_linear_weights(lam, h);
            let f0 = 1.3;
            let f1 = -0.4;
            let direct: f64 = gl.integrate(0.0, h, 4, |u| {
                libm::exp(-lam * (h - u)) * (f0 + (f1 - f0) * u / h)
            });
            assert!(
                (w0 * f0 + w1 * f1 - direct).abs() < 1e-14 * h,
                "{lam} {h} {}",
                w0 * f0 + w1 * f1 - direct
            );
        }
    }
}
