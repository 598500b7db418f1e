//! The Gaussian firing nonlinearity and the scalar limit-model fixed point.

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::special::{normal_cdf, normal_pdf, normal_tail, psi};

/// Mean and variance of a Gaussian conductance profile.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaussianState {
    pub b: f64,
    pub c: f64,
}

impl GaussianState {
    pub fn new(b: f64, c: f64) -> Self {
        Self { b, c }
    }

    pub fn lambda(&self) -> f64 {
        self.b / libm::sqrt(self.c)
    }

    fn check(&self) -> Result<()> {
        if self.c > 0.0 && self.c.is_finite() && self.b.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain("variance c must be positive and finite"))
        }
    }
}

/// `∫₀^∞ g 𝒢(g; b, c) dg`, i.e. `V_F` times the firing rate.
pub fn positive_moment(b: f64, c: f64) -> f64 {
    let s = libm::sqrt(c);
    s * psi(b / s)
}

/// Firing rate `N(b, c) = (1/V_F) ∫₀^∞ g 𝒢(g; b, c) dg`.
pub fn firing_rate(state: GaussianState, v_f: f64) -> Result<f64> {
    state.check()?;
    if !(v_f > 0.0) {
        return Err(Error::Domain("threshold V_F must be positive"));
    }
    Ok(positive_moment(state.b, state.c) / v_f)
}

/// `(∂N/∂b, ∂N/∂c)`.
pub fn firing_rate_grad(state: GaussianState, v_f: f64) -> Result<(f64, f64)> {
    state.check()?;
    if !(v_f > 0.0) {
        return Err(Error::Domain("threshold V_F must be positive"));
    }
    let s = libm::sqrt(state.c);
    let l = state.b / s;
    Ok((normal_cdf(l) / v_f, normal_pdf(l) / (2.0 * s * v_f)))
}

/// Components `(A1, A2, 1 - A1 - A2)` of the linear-stability margin.
pub fn stability_margin(lambda: f64) -> Result<(f64, f64, f64)> {
    if !(lambda >= 0.0) {
        return Err(Error::Domain("lambda must be nonnegative"));
    }
    let a1 = normal_cdf(lambda);
    let a2 = 0.5 * normal_pdf(lambda) / psi(lambda);
    // 1 - A1 is the upper tail; evaluating it directly keeps the margin accurate.
    Ok((a1, a2, normal_tail(lambda) - a2))
}

/// Result of the scalar limit-model firing equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitFiring {
    Rate(f64),
    /// `ρ̄ g1 ≥ 1`: the equation has no root.
    NoSolution,
    /// The bracket grew past its cap without a sign change.
    NoSolutionNumerically {
        upper: f64,
        residual: f64,
    },
}

impl LimitFiring {
    pub fn rate(self) -> Option<f64> {
        match self {
            LimitFiring::Rate(n) => Some(n),
            _ => None,
        }
    }
}

const BRACKET_CAP: f64 = 1e12;

/// Residual `h(N) = N - ρ̄ ∫₀^∞ g 𝒢(g; g0 + g1 N, a0 + a1 N) dg`.
pub fn limit_residual(n: f64, rho_bar: f64, params: &ModelParams) -> f64 {
    n - rho_bar * positive_moment(params.g0 + params.g1 * n, params.a0 + params.a1 * n)
}

/// Whether `ρ̄` sits at or beyond the solvability threshold `1/g1`.
pub fn beyond_threshold(rho_bar: f64, g1: f64) -> bool {
    rho_bar * g1 >= 1.0 - 4.0 * f64::EPSILON
}

/// Solves `N = ρ̄ ∫₀^∞ g 𝒢(g; g0 + g1 N, a0 + a1 N) dg` by bisection.
pub fn solve_limit_firing(rho_bar: f64, params: &ModelParams) -> Result<LimitFiring> {
    if !(rho_bar >= 0.0) || !rho_bar.is_finite() {
        return Err(Error::Domain("rho_bar must be nonnegative"));
    }
    if rho_bar == 0.0 {
        return Ok(LimitFiring::Rate(0.0));
    }
    if beyond_threshold(rho_bar, params.g1) {
        return Ok(LimitFiring::NoSolution);
    }
    let h = |n: f64| limit_residual(n, rho_bar, params);
    let mut lo = params.g0 * rho_bar / (1.0 - params.g1 * rho_bar);
    if h(lo) >= 0.0 {
        return Ok(LimitFiring::Rate(lo));
    }
    let mut hi = 2.0 * lo + 1.0;
    loop {
        let r = h(hi);
        if r > 0.0 {
            break;
        }
        if hi > BRACKET_CAP {
            return Ok(LimitFiring::NoSolutionNumerically {
                upper: hi,
                residual: r,
            });
        }
        lo = hi;
        hi *= 2.0;
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let root = if h(lo).abs() <= h(hi).abs() { lo } else { hi };
    Ok(LimitFiring::Rate(root))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centred_unit_state() {
        let s = GaussianState::new(0.0, 1.0);
        let n = firing_rate(s, 1.0).unwrap();
        assert!((n - 0.398_942_280_401_432_7).abs() < 1e-15);
        let (nb, nc) = firing_rate_grad(s, 1.0).unwrap();
        assert!((nb - 0.5).abs() < 1e-15);
        assert!((nc - 0.199_471_140_200_716_35).abs() < 1e-15);
    }

    #[test]
    fn negative_mean_is_tiny_but_nonnegative() {
        let n = firing_rate(GaussianState::new(-10.0, 1.0), 1.0).unwrap();
        assert!((0.0..1e-20).contains(&n));
        assert!(n > 0.0);
    }

    #[test]
    fn domain_errors() {
        assert!(firing_rate(GaussianState::new(0.0, 0.0), 1.0).is_err());
        assert!(firing_rate_grad(GaussianState::new(0.0, -1.0), 1.0).is_err());
        assert!(stability_margin(-0.1).is_err());
    }

    #[test]
    fn margin_at_zero_is_balanced() {
        let (a1, a2, m) = stability_margin(0.0).unwrap();
        assert_eq!(a1, 0.5);
        assert!((a2 - 0.5).abs() < 1e-15);
        assert!(m.abs() < 1e-15);
    }

    #[test]
    fn limit_firing_trivial_and_threshold() {
        let p = ModelParams::figure2();
        assert_eq!(solve_limit_firing(0.0, &p).unwrap(), LimitFiring::Rate(0.0));
        assert_eq!(
            solve_limit_firing(2.0, &p).unwrap(),
            LimitFiring::NoSolution
        );
        assert!(solve_limit_firing(-1.0, &p).is_err());
    }
}
