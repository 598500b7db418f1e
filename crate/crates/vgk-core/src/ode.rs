//! Closed moment system for Gaussian solutions of the voltage-uniform problem,
//! written in the base time scale:
//!
//! `b' = g0 + g1 N(b, c) - b`, `c' = 2 a0 + 2 a1 N(b, c) - 2 c`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::firing::{firing_rate, firing_rate_grad, GaussianState};
use crate::params::ModelParams;

/// Mean above which a run is reported as diverged within the window.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct OdeTrajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<GaussianState>,
    pub firing: Vec<f64>,
    /// Time at which `b` crossed [`DIVERGENCE_LIMIT`], if it did.
    pub diverged_at: Option<f64>,
}

impl OdeTrajectory {
    pub fn last(&self) -> GaussianState {
        *self
            .states
            .last()
            .expect("trajectory holds the initial state")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateReport {
    pub state: GaussianState,
    pub trace: f64,
    pub det: f64,
    pub stable: bool,
    /// `(g0/(1 - g1/V_F), a0 + (a1/V_F) g0/(1 - g1/V_F))`.
    pub lower_bounds: (f64, f64),
    /// `F(c*)` at the returned root.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Classification {
    Convergent(SteadyStateReport),
    Divergent,
}

pub fn rhs(state: GaussianState, params: &ModelParams) -> Result<(f64, f64)> {
    let n = firing_rate(state, params.v_f)?;
    Ok((
        params.g0 + params.g1 * n - state.b,
        2.0 * params.a0 + 2.0 * params.a1 * n - 2.0 * state.c,
    ))
}

/// Classical RK4 with fixed step; stops early once `b` exceeds [`DIVERGENCE_LIMIT`].
pub fn integrate(
    initial: GaussianState,
    params: &ModelParams,
    t_end: f64,
    dt: f64,
) -> Result<OdeTrajectory> {
    params.validate_degenerate()?;
    if !(initial.c > 0.0) {
        return Err(Error::Domain("initial variance must be positive"));
    }
    if !(dt > 0.0 && t_end > 0.0) {
        return Err(Error::InvalidParam("dt and t_end must be positive"));
    }
    let steps = (t_end / dt).round() as usize;
    let mut traj = OdeTrajectory {
        dt,
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        firing: Vec::with_capacity(steps + 1),
        diverged_at: None,
    };
    let mut s = initial;
    traj.times.push(0.0);
    traj.states.push(s);
    traj.firing.push(firing_rate(s, params.v_f)?);
    let diverged = |s: GaussianState| Error::Diverged {
        t: 0.0,
        b: s.b,
        c: s.c,
    };
    for i in 1..=steps {
        let t = i as f64 * dt;
        let shift = |s: GaussianState, k: (f64, f64), h: f64| {
            GaussianState::new(s.b + h * k.0, s.c + h * k.1)
        };
        let k1 = rhs(s, params).map_err(|_| diverged(s))?;
        let k2 = rhs(shift(s, k1, 0.5 * dt), params).map_err(|_| diverged(s))?;
        let k3 = rhs(shift(s, k2, 0.5 * dt), params).map_err(|_| diverged(s))?;
        let k4 = rhs(shift(s, k3, dt), params).map_err(|_| diverged(s))?;
        let next = GaussianState::new(
            s.b + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            s.c + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        );
        if !(next.b.is_finite() && next.c.is_finite() && next.c > 0.0) {
            return Err(Error::Diverged {
                t: t - dt,
                b: s.b,
                c: s.c,
            });
        }
        s = next;
        traj.times.push(t);
        traj.states.push(s);
        traj.firing.push(firing_rate(s, params.v_f)?);
        if s.b > DIVERGENCE_LIMIT {
            traj.diverged_at = Some(t);
            break;
        }
    }
    Ok(traj)
}

/// `[[g1 N_b - 1, g1 N_c], [2 a1 N_b, 2 a1 N_c - 2]]`.
pub fn jacobian(state: GaussianState, params: &ModelParams) -> Result<[[f64; 2]; 2]> {
    let (nb, nc) = firing_rate_grad(state, params.v_f)?;
    Ok([
        [params.g1 * nb - 1.0, params.g1 * nc],
        [2.0 * params.a1 * nb, 2.0 * params.a1 * nc - 2.0],
    ])
}

/// Steady state via bisection of `F(c) = a0 + a1 N(β(c), c) - c`,
/// `β(c) = g0 + (g1/a1)(c - a0)`. `None` when `g1/V_F ≥ 1`.
pub fn steady_state(params: &ModelParams) -> Result<Option<SteadyStateReport>> {
    params.validate_degenerate()?;
    let ratio = params.g1 / params.v_f;
    if ratio >= 1.0 {
        return Ok(None);
    }
    let b_lower = params.g0 / (1.0 - ratio);
    let lower_bounds = (b_lower, params.a0 + params.a1 / params.v_f * b_lower);
    let n = |b: f64, c: f64| firing_rate(GaussianState::new(b, c), params.v_f);

    let (state, residual) = if params.a1 == 0.0 {
        // Frozen diffusion: c* = a0 and b solves b = g0 + g1 N(b, a0).
        let c = params.a0;
        let f = |b: f64| -> Result<f64> { Ok(params.g0 + params.g1 * n(b, c)? - b) };
        let b = bisect_decreasing(f, params.g0, 2.0 * b_lower + 1.0)?;
        (GaussianState::new(b, c), f(b)?)
    } else {
        let beta = |c: f64| params.g0 + params.g1 / params.a1 * (c - params.a0);
        let f = |c: f64| -> Result<f64> { Ok(params.a0 + params.a1 * n(beta(c), c)? - c) };
        let c = bisect_decreasing(f, params.a0, 2.0 * params.a0)?;
        let b = if params.g1 == 0.0 { params.g0 } else { beta(c) };
        (GaussianState::new(b, c), f(c)?)
    };

    let j = jacobian(state, params)?;
    let trace = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    Ok(Some(SteadyStateReport {
        state,
        trace,
        det,
        stable: trace < 0.0 && det > 0.0,
        lower_bounds,
        residual,
    }))
}

// Root of f, positive at `lo` and eventually negative; the upper end starts
// at `hi` and doubles until the sign changes.
fn bisect_decreasing<F: Fn(f64) -> Result<f64>>(f: F, mut lo: f64, mut hi: f64) -> Result<f64> {
    if f(lo)? <= 0.0 {
        return Ok(lo);
    }
    let mut guard = 0;
    while f(hi)? > 0.0 {
        lo = hi;
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::Domain("steady-state bracket did not close"));
        }
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if f(lo)?.abs() <= f(hi)?.abs() { lo } else { hi })
}

/// Convergent iff `g1/V_F < 1`; the tie counts as divergent.
pub fn classify(params: &ModelParams) -> Result<Classification> {
    Ok(match steady_state(params)? {
        Some(r) => Classification::Convergent(r),
        None => Classification::Divergent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_at_zero_mean() {
        let p = ModelParams::figure2();
        let s = GaussianState::new(0.0, p.a0);
        let (_, dc) = rhs(s, &p).unwrap();
        assert!(dc > 0.0);
    }

    #[test]
    fn rhs_hand_value() {
        let p = ModelParams::figure2();
        let n = firing_rate(GaussianState::new(1.0, 1.0), 1.0).unwrap();
        let (db, dc) = rhs(GaussianState::new(1.0, 1.0), &p).unwrap();
        assert!((db - (10.0 + 0.5 * n - 1.0)).abs() < 1e-15);
        assert!((dc - (4.0 + 0.2 * n - 2.0)).abs() < 1e-15);
    }

    #[test]
    fn no_steady_state_at_or_above_threshold() {
        for g1 in [1.0, 2.0] {
            let p = ModelParams::figure2().with_g1(g1);
            assert!(steady_state(&p).unwrap().is_none());
            assert_eq!(classify(&p).unwrap(), Classification::Divergent);
        }
    }

    #[test]
    fn decoupled_mean() {
        let p = ModelParams::figure2().with_g1(0.0);
        let r = steady_state(&p).unwrap().unwrap();
        assert_eq!(r.state.b, 10.0);
        let n = firing_rate(r.state, 1.0).unwrap();
        assert!((r.state.c - (p.a0 + p.a1 * n)).abs() < 1e-12);
    }

    #[test]
    fn equilibrium_is_stationary() {
        let p = ModelParams::figure2();
        let r = steady_state(&p).unwrap().unwrap();
        let (db, dc) = rhs(r.state, &p).unwrap();
        assert!(db.abs() < 1e-10 && dc.abs() < 1e-10);
        let traj = integrate(r.state, &p, 5.0, 1e-2).unwrap();
        let last = traj.last();
        assert!((last.b - r.state.b).abs() < 5e-8 && (last.c - r.state.c).abs() < 5e-8);
    }
}
