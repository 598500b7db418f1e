//! Semi-explicit Fourier-in-voltage solution with a self-consistent firing rate.
//!
//! Each voltage mode `p_k(t, g)` is a shrunken initial profile convolved with
//! a phase-modulated Gaussian whose mean, variance, phase slope and decay are
//! exponentially weighted integrals of the firing history. For Gaussian-mixture
//! initial data every mode stays a finite sum of complex-weighted Gaussians
//! `W e^{iβg} 𝒢(g; M, S)`, so profiles and firing integrals are evaluated
//! without a convolution grid.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::firing::positive_moment;
use crate::params::{ComplexGaussian, InitMode, InitialData, ModeProfile, ModelParams};
use crate::quad::{exp_linear_weights, GaussLegendre};
use crate::special::gaussian;

/// History integrals at one time node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub t: f64,
    /// Firing rate used by the closure (clamped at zero).
    pub n: f64,
    /// Unclamped value returned by the mode sum.
    pub n_raw: f64,
    pub b: f64,
    pub c: f64,
    pub i1: f64,
    pub i2: f64,
    pub ia: f64,
    pub ig: f64,
}

impl SeriesPoint {
    pub fn origin(n0: f64) -> Self {
        SeriesPoint {
            t: 0.0,
            n: n0.max(0.0),
            n_raw: n0,
            b: 0.0,
            c: 0.0,
            i1: 0.0,
            i2: 0.0,
            ia: 0.0,
            ig: 0.0,
        }
    }

    /// Slope `∫e^{(s-t)/ε}a / ∫e^{2(s-t)/ε}a`, with its limit 1 at `t = 0`.
    pub fn kappa(&self) -> f64 {
        if self.i2 > 0.0 {
            self.i1 / self.i2
        } else {
            1.0
        }
    }

    /// Mode decay factor `D = (Ia - I1²/I2)/ε`.
    pub fn decay(&self, epsilon: f64) -> f64 {
        if self.i2 > 0.0 {
            ((self.ia - self.i1 * self.i1 / self.i2) / epsilon).max(0.0)
        } else {
            0.0
        }
    }
}

impl SeriesPoint {
    /// Exact exponential recursions for a firing rate linear over the step;
    /// `Ia`, `Ig` by the trapezoid rule.
    pub fn advance(
        &self,
        n_new: f64,
        h: f64,
        eps: f64,
        params: &ModelParams,
    ) -> Result<SeriesPoint> {
        if !(n_new >= 0.0) {
            return Err(Error::Domain("firing rate must be nonnegative"));
        }
        let p = self;
        let (g_old, g_new) = (params.g_in(p.n), params.g_in(n_new));
        let (a_old, a_new) = (params.diffusion(p.n), params.diffusion(n_new));
        let (u0, u1) = exp_linear_weights(1.0 / eps, h);
        let (v0, v1) = exp_linear_weights(2.0 / eps, h);
        let e1 = libm::exp(-h / eps);
        let e2 = e1 * e1;
        Ok(SeriesPoint {
            t: p.t + h,
            n: n_new,
            n_raw: n_new,
            b: e1 * p.b + (u0 * g_old + u1 * g_new) / eps,
            c: e2 * p.c + 2.0 * (v0 * a_old + v1 * a_new) / eps,
            i1: e1 * p.i1 + u0 * a_old + u1 * a_new,
            i2: e2 * p.i2 + v0 * a_old + v1 * a_new,
            ia: p.ia + 0.5 * h * (a_old + a_new),
            ig: p.ig + 0.5 * h * (g_old + g_new),
        })
    }
}

/// Uniform-step record of the firing rate and the history integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct FiringSeries {
    pub dt: f64,
    pub epsilon: f64,
    pub points: Vec<SeriesPoint>,
}

impl FiringSeries {
    pub fn new(n0: f64, dt: f64, epsilon: f64) -> Self {
        Self {
            dt,
            epsilon,
            points: vec![SeriesPoint::origin(n0)],
        }
    }

    pub fn last(&self) -> &SeriesPoint {
        self.points.last().expect("series holds the initial point")
    }

    pub fn t_end(&self) -> f64 {
        self.last().t
    }

    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.n).collect()
    }

    /// Point at time `t`, which must lie on the step grid.
    pub fn at(&self, t: f64) -> Result<&SeriesPoint> {
        let x = t / self.dt;
        let i = libm::round(x);
        if t < 0.0 || (x - i).abs() > 1e-6 || i as usize >= self.points.len() {
            return Err(Error::OutOfRange {
                t,
                t_max: self.t_end(),
            });
        }
        Ok(&self.points[i as usize])
    }

    /// History integrals one step ahead, given the firing rate at the new node.
    pub fn next_point(&self, n_new: f64, params: &ModelParams) -> Result<SeriesPoint> {
        self.last().advance(n_new, self.dt, self.epsilon, params)
    }

    pub fn push(&mut self, point: SeriesPoint) {
        self.points.push(point);
    }
}

/// Pure form of one series update.
pub fn advance_series(
    series: &FiringSeries,
    n_new: f64,
    params: &ModelParams,
) -> Result<FiringSeries> {
    let mut next = series.clone();
    let p = series.next_point(n_new, params)?;
    next.push(p);
    Ok(next)
}

/// `W e^{iβg} 𝒢(g; M, S)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolvedComponent {
    pub weight: Complex64,
    pub slope: f64,
    pub mean: f64,
    pub var: f64,
}

impl EvolvedComponent {
    pub fn eval(&self, g: f64) -> Complex64 {
        self.weight * Complex64::from_polar(gaussian(g, self.mean, self.var), self.slope * g)
    }

    /// `∫_ℝ e^{iβg} 𝒢 dg`.
    fn integral(&self) -> Complex64 {
        self.weight
            * Complex64::from_polar(
                libm::exp(-0.5 * self.slope * self.slope * self.var),
                self.slope * self.mean,
            )
    }

    /// `∫₀^∞ g e^{iβg} 𝒢 dg`.
    fn positive_moment(&self, gl: &GaussLegendre) -> Complex64 {
        let sd = libm::sqrt(self.var);
        if self.mean - 9.0 * sd > 0.0 {
            // Negligible mass below zero: whole-line closed form.
            let rot = Complex64::from_polar(
                libm::exp(-0.5 * self.slope * self.slope * self.var),
                self.slope * self.mean,
            );
            return self.weight * Complex64::new(self.mean, self.slope * self.var) * rot;
        }
        let hi = self.mean + 12.0 * sd;
        if hi <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let lo = (self.mean - 12.0 * sd).max(0.0);
        let width = (0.5 * sd).min(core::f64::consts::PI / self.slope.abs().max(1e-300));
        let panels = (((hi - lo) / width).ceil() as usize).clamp(4, 20_000);
        let inner: Complex64 = gl.integrate(lo, hi, panels, |g| {
            Complex64::from_polar(g * gaussian(g, self.mean, self.var), self.slope * g)
        });
        self.weight * inner
    }

    /// `|W| ∫₀^∞ g 𝒢 dg`, an upper bound for the modulus of the positive moment.
    fn moment_bound(&self) -> f64 {
        self.weight.norm() * positive_moment(self.mean, self.var)
    }
}

/// Closed-form mode `p_k(t, ·)` as a complex Gaussian mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolvedMode {
    pub k: i64,
    pub components: Vec<EvolvedComponent>,
}

impl EvolvedMode {
    pub fn eval(&self, g: f64) -> Complex64 {
        self.components.iter().map(|c| c.eval(g)).sum()
    }

    /// `∫_ℝ p_k dg`.
    pub fn integral(&self) -> Complex64 {
        self.components.iter().map(EvolvedComponent::integral).sum()
    }

    /// Upper bound on `|∫₀^∞ g p_k dg|`.
    pub fn moment_bound(&self) -> f64 {
        self.components
            .iter()
            .map(EvolvedComponent::moment_bound)
            .sum()
    }

    /// `∫₀^∞ g p_k dg`.
    pub fn positive_moment(&self, gl: &GaussLegendre) -> Complex64 {
        self.components.iter().map(|c| c.positive_moment(gl)).sum()
    }
}

/// Evolves one initial mode to the time of `point`.
///
/// Tabulated profiles are treated as trapezoid-weighted point masses, which
/// turns the convolution into a sum over the sample nodes; this needs `t > 0`.
pub fn evolve_mode(
    init: &InitMode,
    point: &SeriesPoint,
    params: &ModelParams,
) -> Result<EvolvedMode> {
    let eps = params.epsilon;
    let mu = init.k as f64 * eps * params.omega();
    let sources: Vec<ComplexGaussian> = match &init.profile {
        ModeProfile::Mixture(c) => c.clone(),
        ModeProfile::Tabulated { g_lo, dg, values } => {
            if !(point.c > 0.0) {
                return Err(Error::Domain("tabulated initial modes need t > 0"));
            }
            let last = values.len() - 1;
            values
                .iter()
                .enumerate()
                .filter(|(_, v)| v.norm() > 0.0)
                .map(|(j, v)| ComplexGaussian {
                    weight: v * if j == 0 || j == last { 0.5 * dg } else { *dg },
                    mean: g_lo + j as f64 * dg,
                    var: 0.0,
                })
                .collect()
        }
    };
    let rho = libm::exp(-point.t / eps);
    let kappa = point.kappa();
    let decay = point.decay(eps);
    let kr = kappa * rho - 1.0;
    let components = sources
        .iter()
        .map(|src| {
            let (m, s) = (src.mean, src.var);
            let q = s * rho * rho + point.c;
            let slope = mu * (1.0 - kappa) + mu * kr * s * rho / q;
            let phase = -mu * point.ig / eps
                + mu * kappa * point.b
                + mu * kr * (m * point.c - point.b * s * rho) / q;
            let log_mag = -mu * mu * decay - 0.5 * mu * mu * kr * kr * s * point.c / q;
            EvolvedComponent {
                weight: src.weight * Complex64::from_polar(libm::exp(log_mag), phase),
                slope,
                mean: m * rho + point.b,
                var: q,
            }
        })
        .collect();
    Ok(EvolvedMode {
        k: init.k,
        components,
    })
}

/// Firing-rate contributions of a set of modes `k = 0..=k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeFiring {
    /// `max(raw, 0)`.
    pub total: f64,
    pub raw: f64,
    /// `N_k = (1/V_F) ∫₀^∞ g p_k dg` for `k ≥ 0`; `N_{-k}` is the conjugate.
    pub per_mode: Vec<Complex64>,
    /// Sum of moment bounds of modes skipped as below round-off.
    pub pruned_bound: f64,
}

/// Sums the firing contributions of the given modes (non-negative `k` only).
pub fn firing_from_modes(modes: &[EvolvedMode], v_f: f64, gl: &GaussLegendre) -> ModeFiring {
    let mut per_mode = Vec::with_capacity(modes.len());
    let mut raw = 0.0;
    let mut pruned = 0.0;
    let mut scale = 0.0;
    for mode in modes {
        let bound = mode.moment_bound() / v_f;
        let nk = if mode.k != 0 && bound <= 1e-17 * scale {
            pruned += 2.0 * bound;
            Complex64::new(0.0, 0.0)
        } else {
            mode.positive_moment(gl) / v_f
        };
        if mode.k == 0 {
            raw += nk.re;
            scale = nk.re.abs().max(f64::MIN_POSITIVE);
        } else {
            raw += 2.0 * nk.re;
        }
        per_mode.push(nk);
    }
    ModeFiring {
        total: raw.max(0.0),
        raw,
        per_mode,
        pruned_bound: pruned,
    }
}

/// Uniform node grid on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UniformGrid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl UniformGrid {
    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.n).map(|j| self.lo + j as f64 * h).collect()
    }
}

/// Mode profiles `p_k(t, g_j)` for `k = 0..=k_max` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub t: f64,
    pub v_f: f64,
    pub grid: UniformGrid,
    pub modes: Vec<Vec<Complex64>>,
}

impl SpectralField {
    pub fn k_max(&self) -> usize {
        self.modes.len() - 1
    }

    /// Profile of mode `k`, negative `k` by conjugation.
    pub fn mode(&self, k: i64) -> Vec<Complex64> {
        let m = &self.modes[k.unsigned_abs() as usize];
        if k >= 0 {
            m.clone()
        } else {
            m.iter().map(|z| z.conj()).collect()
        }
    }

    /// `p(t, v, g_j) = (1/V_F) Σ_k p_k e^{ikωv}`.
    pub fn reconstruct(&self, v: f64, j: usize) -> f64 {
        let omega = 2.0 * core::f64::consts::PI / self.v_f;
        let mut s = self.modes[0][j].re;
        for (k, m) in self.modes.iter().enumerate().skip(1) {
            s += 2.0 * (m[j] * Complex64::from_polar(1.0, k as f64 * omega * v)).re;
        }
        s / self.v_f
    }

    /// `∫ p_0 dg` by the trapezoid rule.
    pub fn mass(&self) -> f64 {
        let re: Vec<f64> = self.modes[0].iter().map(|z| z.re).collect();
        crate::quad::trapezoid(&re, self.grid.step())
    }

    /// `∫|p_k| dg` by the trapezoid rule.
    pub fn mode_l1(&self, k: usize) -> f64 {
        let abs: Vec<f64> = self.modes[k].iter().map(|z| z.norm()).collect();
        crate::quad::trapezoid(&abs, self.grid.step())
    }

    /// `‖p - p_0/V_F‖` in `L¹((0, V_F) × ℝ)`, with `n_v` voltage samples.
    pub fn deviation_from_mean(&self, n_v: usize) -> f64 {
        let dv = self.v_f / n_v as f64;
        let omega = 2.0 * core::f64::consts::PI / self.v_f;
        let mut row = vec![0.0; self.grid.n];
        for i in 0..n_v {
            let v = (i as f64 + 0.5) * dv;
            for (j, r) in row.iter_mut().enumerate() {
                let mut s = 0.0;
                for (k, m) in self.modes.iter().enumerate().skip(1) {
                    s += 2.0 * (m[j] * Complex64::from_polar(1.0, k as f64 * omega * v)).re;
                }
                *r += (s / self.v_f).abs() * dv;
            }
        }
        crate::quad::trapezoid(&row, self.grid.step())
    }
}

/// `p_k(t, g)` on `grid` for a time on the series step grid.
pub fn mode_profile(
    k: i64,
    t: f64,
    series: &FiringSeries,
    init: &[InitMode],
    params: &ModelParams,
    grid: &UniformGrid,
) -> Result<Vec<Complex64>> {
    let point = series.at(t)?;
    let idx = k.unsigned_abs() as usize;
    let Some(init_mode) = init.get(idx) else {
        return Ok(vec![Complex64::new(0.0, 0.0); grid.n]);
    };
    let mode = evolve_mode(init_mode, point, params)?;
    let vals = grid.points().into_iter().map(|g| mode.eval(g));
    Ok(if k >= 0 {
        vals.collect()
    } else {
        vals.map(|z| z.conj()).collect()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeRunConfig {
    pub t_end: f64,
    pub dt: f64,
    pub k_max: usize,
    /// Number of conductance nodes in snapshots.
    pub g_points: usize,
    /// Snapshot times, rounded to the step grid.
    pub snapshot_times: Vec<f64>,
}

impl Default for ModeRunConfig {
    fn default() -> Self {
        Self {
            t_end: 10.0,
            dt: 1e-3,
            k_max: 16,
            g_points: 2048,
            snapshot_times: Vec::new(),
        }
    }
}

/// Run-level error budget and closure statistics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModeDiagnostics {
    pub max_iterations: usize,
    pub clamped_steps: usize,
    pub min_raw_rate: f64,
    /// Largest bound on firing contributions of modes beyond `k_max`.
    pub truncation_bound: f64,
    /// Largest bound on modes skipped as below round-off.
    pub pruned_bound: f64,
    /// Largest `|∫p_0 - 1|` over snapshots.
    pub mass_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeRun {
    pub series: FiringSeries,
    pub snapshots: Vec<SpectralField>,
    pub diagnostics: ModeDiagnostics,
}

const FIXED_POINT_DAMPING: f64 = 0.5;
const FIXED_POINT_MAX_ITER: usize = 50;

/// Time-steps the mode formulas, closing the firing rate per step by damped
/// fixed-point iteration.
pub struct ModeSolver<'a> {
    params: ModelParams,
    init: &'a InitialData,
    modes: Vec<InitMode>,
    gl: GaussLegendre,
    beyond_k_max: bool,
}

impl<'a> ModeSolver<'a> {
    pub fn new(init: &'a InitialData, params: &ModelParams, k_max: usize) -> Result<Self> {
        params.validate_kinetic()?;
        init.validate(params.v_f)?;
        let modes = init.fourier_init_coeffs(k_max, params.v_f);
        let beyond_k_max = match init {
            InitialData::SeparableSum { terms } => terms.iter().any(|t| t.trig.order() > k_max),
            InitialData::VHomogeneous { .. } => false,
            InitialData::GridSamples(_) => true,
        };
        Ok(Self {
            params: *params,
            init,
            modes,
            gl: GaussLegendre::new(16),
            beyond_k_max,
        })
    }

    pub fn init_modes(&self) -> &[InitMode] {
        &self.modes
    }

    pub fn evolve(&self, point: &SeriesPoint) -> Result<Vec<EvolvedMode>> {
        self.modes
            .iter()
            .filter(|m| !m.is_zero())
            .map(|m| evolve_mode(m, point, &self.params))
            .collect()
    }

    pub fn firing(&self, point: &SeriesPoint) -> Result<ModeFiring> {
        if point.t == 0.0 {
            let n = self.init.threshold_flux(self.params.v_f);
            return Ok(ModeFiring {
                total: n.max(0.0),
                raw: n,
                per_mode: Vec::new(),
                pruned_bound: 0.0,
            });
        }
        Ok(firing_from_modes(
            &self.evolve(point)?,
            self.params.v_f,
            &self.gl,
        ))
    }

    /// Bound on the firing contribution of modes `|k| > k_max`.
    pub fn truncation_bound(&self, point: &SeriesPoint) -> f64 {
        if !self.beyond_k_max {
            return 0.0;
        }
        let eps = self.params.epsilon;
        let w = eps * self.params.omega();
        let d = point.decay(eps);
        let scale =
            1.0 + positive_moment(point.b, point.c.max(f64::MIN_POSITIVE)) / self.params.v_f;
        let mut sum = 0.0;
        let mut k = self.modes.len() as f64;
        loop {
            let term = libm::exp(-k * k * w * w * d);
            sum += 2.0 * term;
            if term < 1e-18 * sum || k > 1e6 {
                break;
            }
            k += 1.0;
        }
        sum * scale
    }

    pub fn snapshot(&self, point: &SeriesPoint, n: usize) -> Result<SpectralField> {
        let evolved = self.evolve(point)?;
        let (mut lo, mut hi) = (-10.0_f64, 0.0_f64);
        for m in &evolved {
            for c in &m.components {
                let sd = libm::sqrt(c.var);
                lo = lo.min(c.mean - 10.0 * sd);
                hi = hi.max(c.mean + 10.0 * sd);
            }
        }
        let grid = UniformGrid { lo, hi, n };
        let g = grid.points();
        let mut modes = vec![vec![Complex64::new(0.0, 0.0); n]; self.modes.len()];
        for m in &evolved {
            modes[m.k as usize] = g.iter().map(|&x| m.eval(x)).collect();
        }
        Ok(SpectralField {
            t: point.t,
            v_f: self.params.v_f,
            grid,
            modes,
        })
    }

    pub fn run(&self, cfg: &ModeRunConfig) -> Result<ModeRun> {
        if !(cfg.dt > 0.0 && cfg.t_end > 0.0) {
            return Err(Error::InvalidParam("dt and t_end must be positive"));
        }
        let steps = libm::round(cfg.t_end / cfg.dt) as usize;
        let n0 = self.init.threshold_flux(self.params.v_f);
        let mut series = FiringSeries::new(n0, cfg.dt, self.params.epsilon);
        let mut diag = ModeDiagnostics {
            min_raw_rate: n0,
            ..Default::default()
        };
        let snap_steps: Vec<usize> = cfg
            .snapshot_times
            .iter()
            .map(|t| libm::round(t / cfg.dt) as usize)
            .collect();
        let mut snapshots = Vec::new();
        if snap_steps.contains(&0) {
            // The t = 0 snapshot comes straight from the initial coefficients.
            snapshots.push(self.initial_snapshot(cfg.g_points));
        }
        for i in 1..=steps {
            let pts = &series.points;
            let last = pts[pts.len() - 1].n;
            let mut n = if pts.len() >= 2 {
                (2.0 * last - pts[pts.len() - 2].n).max(0.0)
            } else {
                last
            };
            let mut trace = Vec::new();
            let mut converged = false;
            let mut raw = n;
            for _ in 0..FIXED_POINT_MAX_ITER {
                let point = series.next_point(n, &self.params)?;
                let f = self.firing(&point)?;
                raw = f.raw;
                diag.pruned_bound = diag.pruned_bound.max(f.pruned_bound);
                let next = n + FIXED_POINT_DAMPING * (f.total - n);
                trace.push(next);
                let tol = 1e-10_f64.max(1e-13 * next.abs());
                let done = (next - n).abs() <= tol;
                n = next;
                if done {
                    converged = true;
                    break;
                }
            }
            if !converged || !n.is_finite() {
                return Err(Error::StepFailure {
                    t: i as f64 * cfg.dt,
                    trace,
                });
            }
            let mut point = series.next_point(n, &self.params)?;
            point.n_raw = raw;
            if raw < 0.0 {
                diag.clamped_steps += 1;
            }
            diag.min_raw_rate = diag.min_raw_rate.min(raw);
            diag.max_iterations = diag.max_iterations.max(trace.len());
            diag.truncation_bound = diag.truncation_bound.max(self.truncation_bound(&point));
            series.push(point);
            if snap_steps.contains(&i) {
                let snap = self.snapshot(&point, cfg.g_points)?;
                diag.mass_drift = diag.mass_drift.max((snap.mass() - 1.0).abs());
                snapshots.push(snap);
            }
        }
        Ok(ModeRun {
            series,
            snapshots,
            diagnostics: diag,
        })
    }

    fn initial_snapshot(&self, n: usize) -> SpectralField {
        let (lo, hi) = self.init.g_range(10.0);
        let grid = UniformGrid {
            lo: lo.min(-10.0),
            hi,
            n,
        };
        let g = grid.points();
        let modes = self
            .modes
            .iter()
            .map(|m| g.iter().map(|&x| m.eval(x)).collect())
            .collect();
        SpectralField {
            t: 0.0,
            v_f: self.params.v_f,
            grid,
            modes,
        }
    }
}

/// Convenience wrapper around [`ModeSolver`].
pub fn run(init: &InitialData, params: &ModelParams, cfg: &ModeRunConfig) -> Result<ModeRun> {
    ModeSolver::new(init, params, cfg.k_max)?.run(cfg)
}
