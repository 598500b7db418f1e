//! Fast-conductance limit: the voltage marginal is transported at speed
//! `g_in(t)` and the firing rate solves a scalar equation at every instant.
//!
//! With the internal clock `τ = ∫ g_in dt` the marginal is a rigid rotation,
//! `n(τ, v) = ρ_init(v - τ)`, so the firing rate depends on `τ` only through
//! `ρ_init((V_F - τ) mod V_F)`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::firing::{beyond_threshold, solve_limit_firing, LimitFiring};
use crate::params::ModelParams;

/// Tabulated periodic voltage marginal on `n + 1` uniform nodes of `[0, V_F]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FclState {
    pub v_f: f64,
    pub rho: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FclFiring {
    Rate(f64),
    BlowUp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FclSample {
    pub t: f64,
    pub tau: f64,
    pub n: f64,
    pub rho_at_vf: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum FclOutcome {
    Periodic {
        period: f64,
    },
    Blowup {
        t_star: f64,
        v_star: f64,
        tau_star: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FclRun {
    pub trajectory: Vec<FclSample>,
    pub outcome: FclOutcome,
}

impl FclState {
    /// Samples `f` on `n + 1` nodes; the last node copies the first.
    pub fn from_fn(v_f: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let mut rho: Vec<f64> = (0..n).map(|i| f(v_f * i as f64 / n as f64)).collect();
        rho.push(rho[0]);
        Self { v_f, rho }
    }

    pub fn uniform(v_f: f64, n: usize) -> Self {
        Self::from_fn(v_f, n, |_| 1.0 / v_f)
    }

    fn h(&self) -> f64 {
        self.v_f / (self.rho.len() - 1) as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_f > 0.0) || self.rho.len() < 3 {
            return Err(Error::InvalidInit(
                "marginal needs V_F > 0 and at least two cells".into(),
            ));
        }
        if self.rho.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) {
            return Err(Error::InvalidInit("marginal must be nonnegative".into()));
        }
        let mass = crate::quad::trapezoid(&self.rho, self.h());
        if (mass - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInit(alloc::format!(
                "marginal integrates to {mass}, not 1"
            )));
        }
        if (self.rho[0] - self.rho[self.rho.len() - 1]).abs() > 1e-12 {
            return Err(Error::InvalidInit("marginal must be periodic".into()));
        }
        Ok(())
    }

    /// Linear interpolation, periodic in `v`.
    pub fn value(&self, v: f64) -> f64 {
        let n = self.rho.len() - 1;
        let x = v.rem_euclid(self.v_f) / self.h();
        let j = (x as usize).min(n - 1);
        let w = x - j as f64;
        self.rho[j] * (1.0 - w) + self.rho[j + 1] * w
    }

    pub fn max(&self) -> f64 {
        self.rho.iter().copied().fold(0.0, f64::max)
    }

    /// Boundary density `ρ(t, V_F)` at internal time `τ`.
    pub fn rho_at_threshold(&self, tau: f64) -> f64 {
        self.value(self.v_f - tau)
    }

    /// Marginal `n(τ, ·)` sampled on `m` cell centres.
    pub fn profile_at_tau(&self, tau: f64, m: usize) -> Vec<f64> {
        let dv = self.v_f / m as f64;
        (0..m)
            .map(|i| self.value((i as f64 + 0.5) * dv - tau))
            .collect()
    }

    /// Largest `v*` with `ρ_init(v*) = 1/g1` and `ρ_init < 1/g1` on `(v*, V_F]`.
    pub fn v_star(&self, g1: f64) -> Option<f64> {
        let n = self.rho.len() - 1;
        let h = self.h();
        let level = 1.0 / g1;
        (0..=n)
            .rev()
            .find(|&j| beyond_threshold(self.rho[j], g1))
            .map(|j| {
                if j == n {
                    return self.v_f;
                }
                // Linear crossing between nodes j and j + 1.
                let (r0, r1) = (self.rho[j], self.rho[j + 1]);
                let w = if r0 > r1 {
                    ((r0 - level) / (r0 - r1)).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                (j as f64 + w) * h
            })
    }
}

/// `N(τ)` from the scalar limit equation, or a blow-up marker.
pub fn firing_at_tau(tau: f64, state: &FclState, params: &ModelParams) -> Result<FclFiring> {
    if !(tau >= 0.0) {
        return Err(Error::Domain("tau must be nonnegative"));
    }
    Ok(
        match solve_limit_firing(state.rho_at_threshold(tau), params)? {
            LimitFiring::Rate(n) => FclFiring::Rate(n),
            _ => FclFiring::BlowUp,
        },
    )
}

/// `g1* = 1/max ρ_init`.
pub fn threshold_g1(state: &FclState) -> f64 {
    1.0 / state.max()
}

/// Follows the limit model in the internal clock and recovers physical time
/// by the trapezoid rule on `dt/dτ = 1/g_in`.
pub fn evolve(state: &FclState, params: &ModelParams, t_end: f64, dtau: f64) -> Result<FclRun> {
    state.validate()?;
    params.validate_degenerate()?;
    if !(dtau > 0.0) {
        return Err(Error::InvalidParam("dtau must be positive"));
    }
    let v_f = state.v_f;
    if beyond_threshold(state.rho_at_threshold(0.0), params.g1) {
        return Err(Error::Domain(
            "boundary density reaches 1/g1 at t = 0: blow-up at t = 0",
        ));
    }
    let per = libm::round(v_f / dtau).max(1.0) as usize;
    let dtau = v_f / per as f64;
    let v_star = state.v_star(params.g1).filter(|_| params.g1 > 0.0);
    let rate = |tau: f64| -> Result<Option<f64>> {
        Ok(match firing_at_tau(tau, state, params)? {
            FclFiring::Rate(n) => Some(n),
            FclFiring::BlowUp => None,
        })
    };

    let mut traj = Vec::new();
    let mut t = 0.0;
    match v_star {
        None => {
            let mut cache = Vec::with_capacity(per + 1);
            for i in 0..=per {
                cache.push(
                    rate(i as f64 * dtau)?.ok_or(Error::Domain("limit firing lost solvability"))?,
                );
            }
            let inv: Vec<f64> = cache.iter().map(|&n| 1.0 / params.g_in(n)).collect();
            let period = crate::quad::trapezoid(&inv, dtau);
            let mut i = 0usize;
            loop {
                let r = i % per;
                let tau = i as f64 * dtau;
                traj.push(FclSample {
                    t,
                    tau,
                    n: cache[r],
                    rho_at_vf: state.rho_at_threshold(tau),
                });
                if t >= t_end {
                    break;
                }
                t += 0.5 * dtau * (inv[r] + inv[r + 1]);
                i += 1;
            }
            Ok(FclRun {
                trajectory: traj,
                outcome: FclOutcome::Periodic { period },
            })
        }
        Some(v_star) => {
            let tau_star = v_f - v_star;
            let mut i = 0usize;
            let mut prev_inv: Option<f64> = None;
            let mut t_star = None;
            loop {
                let tau = i as f64 * dtau;
                if tau >= tau_star {
                    break;
                }
                let Some(n) = rate(tau)? else {
                    t_star = Some(t);
                    break;
                };
                let inv = 1.0 / params.g_in(n);
                if let Some(p) = prev_inv {
                    t += 0.5 * dtau * (p + inv);
                }
                prev_inv = Some(inv);
                if t <= t_end {
                    traj.push(FclSample {
                        t,
                        tau,
                        n,
                        rho_at_vf: state.rho_at_threshold(tau),
                    });
                }
                i += 1;
            }
            let t_star = t_star.unwrap_or_else(|| {
                let last_tau = (i.max(1) - 1) as f64 * dtau;
                t + 0.5 * (tau_star - last_tau) * prev_inv.unwrap_or(0.0)
            });
            Ok(FclRun {
                trajectory: traj,
                outcome: FclOutcome::Blowup {
                    t_star,
                    v_star,
                    tau_star,
                },
            })
        }
    }
}
