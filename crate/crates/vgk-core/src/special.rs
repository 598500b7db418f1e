//! Standard normal helpers.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * libm::exp(-0.5 * x * x)
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Φ(x)`, accurate for large positive `x`.
pub fn normal_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Gaussian density with the given mean and variance.
pub fn gaussian(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    libm::exp(-0.5 * d * d / var) / libm::sqrt(2.0 * PI * var)
}

/// `ψ(λ) = E[(Z + λ)₊] = φ(λ) + λ Φ(λ)` for a standard normal `Z`.
///
/// Uses `ψ(λ) = λ + ψ(-λ)` so that `ψ(λ) ≥ λ₊` holds in floating point, and a
/// continued fraction for the far left tail where the direct form cancels.
pub fn psi(lambda: f64) -> f64 {
    if lambda >= 0.0 {
        lambda + psi_left(lambda)
    } else {
        psi_left(-lambda)
    }
}

// ψ(-x) = φ(x) - x Q(x) for x >= 0.
fn psi_left(x: f64) -> f64 {
    if x <= 5.0 {
        return (normal_pdf(x) - x * normal_tail(x)).max(0.0);
    }
    if x > 40.0 {
        return 0.0;
    }
    // Mills ratio R = 1/(x + r), r = 1/(x + 2/(x + 3/(x + ...))).
    let mut t = x;
    for k in (2..=120).rev() {
        t = x + k as f64 / t;
    }
    let r = 1.0 / t;
    let mills = 1.0 / (x + r);
    normal_pdf(x) * r * mills
}
