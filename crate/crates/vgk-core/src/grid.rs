//! Finite-volume solver for the kinetic equation on a periodic-in-voltage,
//! truncated-in-conductance grid.
//!
//! One step is a Strang splitting: half a step of upwind voltage transport,
//! a backward-Euler Chang–Cooper step for the conductance Fokker–Planck
//! operator, and another half transport step. The firing rate entering the
//! conductance step is taken from the field at the start of the step.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::modes::{FiringSeries, SeriesPoint};
use crate::params::{InitialData, ModelParams};

/// Largest admissible `dt · max|g| / Δv`.
pub const MAX_COURANT: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    pub n_v: usize,
    pub n_g: usize,
    pub g_lo: f64,
    pub g_hi: f64,
}

impl GridSpec {
    /// Keeps `n_g` and the cell width of `[g_lo, g_hi]` but shifts the
    /// window so that `g = 0` is a cell face.
    pub fn aligned(n_v: usize, n_g: usize, g_lo: f64, g_hi: f64) -> Self {
        let dg = (g_hi - g_lo) / n_g as f64;
        let below = libm::ceil(-g_lo / dg).max(0.0);
        let lo = -below * dg;
        Self {
            n_v,
            n_g,
            g_lo: lo,
            g_hi: lo + n_g as f64 * dg,
        }
    }

    /// Same window with every cell split in two along both axes.
    pub fn refined(&self) -> Self {
        Self {
            n_v: 2 * self.n_v,
            n_g: 2 * self.n_g,
            ..*self
        }
    }

    pub fn dg(&self) -> f64 {
        (self.g_hi - self.g_lo) / self.n_g as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Transport {
    #[default]
    Upwind,
    /// Second-order flux with a minmod limiter.
    Minmod,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepOptions {
    pub transport: Transport,
    /// Diagnostic toggle: skip the conductance step, leaving rigid transport.
    pub freeze_conductance: bool,
    /// Re-run each step with the firing rate averaged over its endpoints.
    pub predictor_corrector: bool,
}

/// Cell averages `p[j * n_v + i]` over voltage cell `i`, conductance cell `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub v_f: f64,
    pub spec: GridSpec,
    pub p: Vec<f64>,
    pub t: f64,
}

/// Firing rate from the seam line, clamped and raw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRate {
    pub rate: f64,
    pub raw: f64,
}

impl GridField {
    /// Samples initial data at cell centres and rescales to unit mass.
    pub fn from_initial(init: &InitialData, v_f: f64, spec: GridSpec) -> Result<Self> {
        init.validate(v_f)?;
        let mut f = Self {
            v_f,
            spec,
            p: vec![0.0; spec.n_v * spec.n_g],
            t: 0.0,
        };
        let dv = f.dv();
        for j in 0..spec.n_g {
            let g = f.g_center(j);
            for i in 0..spec.n_v {
                f.p[j * spec.n_v + i] = init.density((i as f64 + 0.5) * dv, g, v_f).max(0.0);
            }
        }
        let m = f.mass();
        if !(m > 0.0) {
            return Err(Error::InvalidInit(
                "initial data has no mass on the grid".into(),
            ));
        }
        f.p.iter_mut().for_each(|x| *x /= m);
        Ok(f)
    }

    pub fn dv(&self) -> f64 {
        self.v_f / self.spec.n_v as f64
    }

    pub fn g_center(&self, j: usize) -> f64 {
        self.spec.g_lo + (j as f64 + 0.5) * self.spec.dg()
    }

    pub fn mass(&self) -> f64 {
        self.p.iter().sum::<f64>() * self.dv() * self.spec.dg()
    }

    pub fn min(&self) -> f64 {
        self.p.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Mass within two cells of either conductance boundary.
    pub fn leakage(&self) -> f64 {
        let n_v = self.spec.n_v;
        let n_g = self.spec.n_g;
        let rows = [0, 1, n_g - 2, n_g - 1];
        rows.iter()
            .map(|&j| self.p[j * n_v..(j + 1) * n_v].iter().sum::<f64>())
            .sum::<f64>()
            * self.dv()
            * self.spec.dg()
    }

    /// Conductance marginal `∫ p dv` per cell.
    pub fn g_marginal(&self) -> Vec<f64> {
        let n_v = self.spec.n_v;
        (0..self.spec.n_g)
            .map(|j| self.p[j * n_v..(j + 1) * n_v].iter().sum::<f64>() * self.dv())
            .collect()
    }

    /// First conductance moment `∫∫ g p`.
    pub fn first_moment(&self) -> f64 {
        self.g_marginal()
            .iter()
            .enumerate()
            .map(|(j, m)| self.g_center(j) * m)
            .sum::<f64>()
            * self.spec.dg()
    }

    /// `‖p - mean_v p‖` in `L¹`.
    pub fn deviation_from_mean(&self) -> f64 {
        let n_v = self.spec.n_v;
        let mut acc = 0.0;
        for j in 0..self.spec.n_g {
            let row = &self.p[j * n_v..(j + 1) * n_v];
            let mean = row.iter().sum::<f64>() / n_v as f64;
            acc += row.iter().map(|x| (x - mean).abs()).sum::<f64>();
        }
        acc * self.dv() * self.spec.dg()
    }

    pub fn max_speed(&self) -> f64 {
        self.spec.g_lo.abs().max(self.spec.g_hi.abs())
    }

    pub fn stable_dt(&self) -> f64 {
        MAX_COURANT * self.dv() / self.max_speed()
    }

    /// Advances by `dt` in place.
    pub fn step(&mut self, params: &ModelParams, dt: f64, opts: StepOptions) -> Result<()> {
        let courant = dt * self.max_speed() / self.dv();
        if courant > MAX_COURANT * (1.0 + 1e-12) {
            return Err(Error::Cfl { courant });
        }
        let mut n = firing_rate_grid(self).rate;
        if opts.predictor_corrector && !opts.freeze_conductance {
            let mut trial = self.clone();
            trial.split_step(params, n, dt, opts)?;
            n = 0.5 * (n + firing_rate_grid(&trial).rate);
        }
        self.split_step(params, n, dt, opts)
    }

    fn split_step(
        &mut self,
        params: &ModelParams,
        n: f64,
        dt: f64,
        opts: StepOptions,
    ) -> Result<()> {
        self.transport(0.5 * dt, opts.transport);
        if !opts.freeze_conductance {
            self.conductance_step(params, n, dt)?;
        }
        self.transport(0.5 * dt, opts.transport);
        self.t += dt;
        Ok(())
    }

    fn transport(&mut self, dt: f64, scheme: Transport) {
        let n_v = self.spec.n_v;
        let dv = self.dv();
        let mut flux = vec![0.0; n_v];
        for j in 0..self.spec.n_g {
            let g = self.g_center(j);
            let c = g.abs() * dt / dv;
            let row = &mut self.p[j * n_v..(j + 1) * n_v];
            // flux[i] is the upwind value carried through the face between
            // cells i and i + 1 (periodic), in units of the cell value.
            for i in 0..n_v {
                let (up, down, upup) = if g >= 0.0 {
                    (row[i], row[(i + 1) % n_v], row[(i + n_v - 1) % n_v])
                } else {
                    let r = (i + 1) % n_v;
                    (row[r], row[i], row[(r + 1) % n_v])
                };
                flux[i] = match scheme {
                    Transport::Upwind => up,
                    Transport::Minmod => up + 0.5 * (1.0 - c) * minmod(up - upup, down - up),
                };
            }
            let sign = if g >= 0.0 { 1.0 } else { -1.0 };
            let first = flux[n_v - 1];
            let mut prev = first;
            for i in 0..n_v {
                let f = flux[i];
                row[i] -= sign * c * (f - prev);
                prev = f;
            }
        }
    }

    fn conductance_step(&mut self, params: &ModelParams, n: f64, dt: f64) -> Result<()> {
        let n_g = self.spec.n_g;
        let n_v = self.spec.n_v;
        let dg = self.spec.dg();
        let g_in = params.g_in(n);
        let a = params.diffusion(n);
        let r = dt / (params.epsilon * dg);
        // Face j + 1/2 flux = alpha[j] p[j + 1] - beta[j] p[j].
        let mut alpha = vec![0.0; n_g];
        let mut beta = vec![0.0; n_g];
        for j in 0..n_g - 1 {
            let drift = self.spec.g_lo + (j as f64 + 1.0) * dg - g_in;
            if a > 0.0 {
                let w = dg * drift / a;
                let d = a / dg;
                beta[j] = d * bernoulli(w);
                alpha[j] = d * bernoulli(-w);
            } else {
                alpha[j] = drift.max(0.0);
                beta[j] = (-drift).max(0.0);
            }
        }
        // Tridiagonal factors: lower[j] p[j-1] + diag[j] p[j] + upper[j] p[j+1].
        let mut cp = vec![0.0; n_g];
        let mut inv_m = vec![0.0; n_g];
        let mut lower = vec![0.0; n_g];
        for j in 0..n_g {
            let left_alpha = if j > 0 { alpha[j - 1] } else { 0.0 };
            let diag = 1.0 + r * (beta[j] + left_alpha);
            lower[j] = if j > 0 { -r * beta[j - 1] } else { 0.0 };
            let upper = -r * alpha[j];
            let m = if j > 0 {
                diag - lower[j] * cp[j - 1]
            } else {
                diag
            };
            if !(m > 0.0) {
                return Err(Error::SingularSolve);
            }
            inv_m[j] = 1.0 / m;
            cp[j] = upper * inv_m[j];
        }
        let p = &mut self.p;
        p[..n_v].iter_mut().for_each(|x| *x *= inv_m[0]);
        for j in 1..n_g {
            let (head, tail) = p.split_at_mut(j * n_v);
            let prev = &head[(j - 1) * n_v..];
            let cur = &mut tail[..n_v];
            let (l, im) = (lower[j], inv_m[j]);
            for (x, y) in cur.iter_mut().zip(prev) {
                *x = (*x - l * y) * im;
            }
        }
        for j in (0..n_g - 1).rev() {
            let (head, tail) = p.split_at_mut((j + 1) * n_v);
            let cur = &mut head[j * n_v..];
            let next = &tail[..n_v];
            let c = cp[j];
            for (x, y) in cur.iter_mut().zip(next) {
                *x -= c * y;
            }
        }
        Ok(())
    }
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

// x / (e^x - 1)
fn bernoulli(x: f64) -> f64 {
    if x.abs() < 1e-10 {
        1.0 - 0.5 * x
    } else if x > 700.0 {
        0.0
    } else {
        x / libm::expm1(x)
    }
}

/// Pure form of one step.
pub fn step(field: &GridField, params: &ModelParams, dt: f64) -> Result<GridField> {
    let mut next = field.clone();
    next.step(params, dt, StepOptions::default())?;
    Ok(next)
}

/// `∫₀^∞ g p(t, V_F, g) dg` with the density on the seam taken as the average
/// of the last and first voltage cells.
pub fn firing_rate_grid(field: &GridField) -> GridRate {
    let n_v = field.spec.n_v;
    let dg = field.spec.dg();
    let mut raw = 0.0;
    for j in 0..field.spec.n_g {
        let g = field.g_center(j);
        if g > 0.0 {
            let seam = 0.5 * (field.p[j * n_v + n_v - 1] + field.p[j * n_v]);
            raw += g * seam;
        }
    }
    raw *= dg;
    GridRate {
        rate: raw.max(0.0),
        raw,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GridDiagnostics {
    pub steps: usize,
    pub dt: f64,
    /// `max |M(t) - M(0)| / t` over output times.
    pub mass_drift_rate: f64,
    pub min_density: f64,
    pub max_leakage: f64,
    pub min_raw_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRun {
    /// History integrals recorded at the output interval.
    pub series: FiringSeries,
    pub field: GridField,
    pub snapshots: Vec<GridField>,
    pub diagnostics: GridDiagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRunConfig {
    pub t_end: f64,
    /// Upper bound on the step; the CFL limit may shrink it further.
    pub dt_max: f64,
    /// Output interval; steps are chosen to land on it exactly.
    pub output_dt: f64,
    pub snapshot_times: Vec<f64>,
    pub options: StepOptions,
}

/// Integrates the field to `t_end`.
pub fn run(mut field: GridField, params: &ModelParams, cfg: &GridRunConfig) -> Result<GridRun> {
    params.validate_kinetic()?;
    if !(cfg.t_end > 0.0 && cfg.output_dt > 0.0 && cfg.dt_max > 0.0) {
        return Err(Error::InvalidParam(
            "t_end, dt and output interval must be positive",
        ));
    }
    let dt_target = cfg.dt_max.min(field.stable_dt());
    let sub = libm::ceil(cfg.output_dt / dt_target - 1e-9).max(1.0) as usize;
    let dt = cfg.output_dt / sub as f64;
    let outputs = libm::round(cfg.t_end / cfg.output_dt) as usize;
    let snap_at: Vec<usize> = cfg
        .snapshot_times
        .iter()
        .map(|t| libm::round(t / cfg.output_dt) as usize)
        .collect();

    let m0 = field.mass();
    let r0 = firing_rate_grid(&field);
    let mut diag = GridDiagnostics {
        dt,
        min_density: field.min(),
        max_leakage: field.leakage(),
        min_raw_rate: r0.raw,
        ..Default::default()
    };
    let mut series = FiringSeries::new(r0.rate, cfg.output_dt, params.epsilon);
    let mut acc = SeriesPoint::origin(r0.rate);
    let mut snapshots = Vec::new();
    if snap_at.contains(&0) {
        snapshots.push(field.clone());
    }
    for k in 1..=outputs {
        for _ in 0..sub {
            field.step(params, dt, cfg.options)?;
            diag.steps += 1;
            let r = firing_rate_grid(&field);
            diag.min_raw_rate = diag.min_raw_rate.min(r.raw);
            acc = acc.advance(r.rate, dt, params.epsilon, params)?;
            acc.n_raw = r.raw;
        }
        diag.min_density = diag.min_density.min(field.min());
        diag.max_leakage = diag.max_leakage.max(field.leakage());
        diag.mass_drift_rate = diag
            .mass_drift_rate
            .max((field.mass() - m0).abs() / field.t);
        let mut point = acc;
        point.t = k as f64 * cfg.output_dt;
        series.push(point);
        if snap_at.contains(&k) {
            snapshots.push(field.clone());
        }
    }
    Ok(GridRun {
        series,
        field,
        snapshots,
        diagnostics: diag,
    })
}

/// Runs the same initial data for several `ε`, each with `dt ≤ ε/10`.
pub fn run_eps_sweep(
    init: &InitialData,
    params: &ModelParams,
    spec: GridSpec,
    eps_list: &[f64],
    cfg: &GridRunConfig,
) -> Result<Vec<(f64, GridRun)>> {
    eps_list
        .iter()
        .map(|&eps| {
            if !(eps > 0.0) {
                return Err(Error::InvalidParam(
                    "epsilon must be positive for kinetic solvers",
                ));
            }
            let p = params.with_epsilon(eps);
            let field = GridField::from_initial(init, p.v_f, spec)?;
            let c = GridRunConfig {
                dt_max: cfg.dt_max.min(eps / 10.0),
                ..cfg.clone()
            };
            Ok((eps, run(field, &p, &c)?))
        })
        .collect()
}
