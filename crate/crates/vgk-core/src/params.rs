//! Model parameters, initial data and the velocity change of variable.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::firing::positive_moment;
use crate::quad::GaussLegendre;
use crate::special::gaussian;

/// The parameter tuple shared by every solver.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelParams {
    pub g0: f64,
    pub g1: f64,
    pub a0: f64,
    pub a1: f64,
    pub v_f: f64,
    pub epsilon: f64,
}

impl ModelParams {
    /// Blow-up regime of the limit model: `g0 = 10, g1 = 1, a0 = 2, a1 = 0.1`, `V_F = 1`.
    pub fn figure1() -> Self {
        Self {
            g0: 10.0,
            g1: 1.0,
            a0: 2.0,
            a1: 0.1,
            v_f: 1.0,
            epsilon: 1.0,
        }
    }

    /// Periodic regime of the limit model: as [`figure1`](Self::figure1) with `g1 = 0.5`.
    pub fn figure2() -> Self {
        Self {
            g1: 0.5,
            ..Self::figure1()
        }
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        Self { epsilon, ..self }
    }

    pub fn with_g1(self, g1: f64) -> Self {
        Self { g1, ..self }
    }

    /// Checks every constraint and reports the first violation.
    pub fn validate(&self) -> Result<()> {
        self.check(false)
    }

    /// As [`validate`](Self::validate) but also admits `a1 = 0`, the
    /// frozen-coefficient test mode used together with `g1 = 0`.
    pub fn validate_degenerate(&self) -> Result<()> {
        self.check(true)
    }

    fn check(&self, allow_zero_a1: bool) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(self.g0) {
            return Err(Error::InvalidParam("g0 must be positive"));
        }
        if !(self.g1.is_finite() && self.g1 >= 0.0) {
            return Err(Error::InvalidParam("g1 must be nonnegative"));
        }
        if !ok(self.a0) {
            return Err(Error::InvalidParam("a0 must be positive"));
        }
        let a1_ok = if allow_zero_a1 {
            self.a1.is_finite() && self.a1 >= 0.0
        } else {
            ok(self.a1)
        };
        if !a1_ok {
            return Err(Error::InvalidParam("a1 must be positive"));
        }
        if !ok(self.v_f) {
            return Err(Error::InvalidParam("v_f must be positive"));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::InvalidParam("epsilon must be nonnegative"));
        }
        Ok(())
    }

    /// Validation for the kinetic solvers, which need `ε > 0`.
    pub fn validate_kinetic(&self) -> Result<()> {
        self.validate_degenerate()?;
        if self.epsilon > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParam(
                "epsilon must be positive for kinetic solvers",
            ))
        }
    }

    pub fn g_in(&self, n: f64) -> f64 {
        self.g0 + self.g1 * n
    }

    pub fn diffusion(&self, n: f64) -> f64 {
        self.a0 + self.a1 * n
    }

    /// Base voltage wavenumber `2π/V_F`.
    pub fn omega(&self) -> f64 {
        2.0 * PI / self.v_f
    }
}

/// `Σ cos[n] cos(n ω v) + sin[n] sin(n ω v)` with `ω = 2π/V_F`; `sin[0]` is ignored.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrigPoly {
    pub cos: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub sin: Vec<f64>,
}

impl TrigPoly {
    pub fn eval(&self, v: f64, omega: f64) -> f64 {
        let mut s = self.cos.first().copied().unwrap_or(0.0);
        for n in 1..self.order() + 1 {
            let x = n as f64 * omega * v;
            let a = self.cos.get(n).copied().unwrap_or(0.0);
            let b = self.sin.get(n).copied().unwrap_or(0.0);
            s += a * libm::cos(x) + b * libm::sin(x);
        }
        s
    }

    pub fn order(&self) -> usize {
        self.cos.len().max(self.sin.len()).saturating_sub(1)
    }

    /// `∫₀^{V_F} trig(v) e^{-ikωv} dv`.
    pub fn fourier(&self, k: i64, v_f: f64) -> Complex64 {
        let n = k.unsigned_abs() as usize;
        let a = self.cos.get(n).copied().unwrap_or(0.0);
        if n == 0 {
            return Complex64::new(v_f * a, 0.0);
        }
        let b = self.sin.get(n).copied().unwrap_or(0.0);
        let sign = if k > 0 { -1.0 } else { 1.0 };
        Complex64::new(0.5 * v_f * a, 0.5 * v_f * b * sign)
    }
}

/// Weighted Gaussian profile in conductance.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaussianComponent {
    pub mean: f64,
    pub variance: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeparableTerm {
    pub trig: TrigPoly,
    pub gaussian: GaussianComponent,
}

/// Cell-centred samples; `values[j * n_v + i]` is the density in voltage
/// cell `i` and conductance cell `j`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSamples {
    pub n_v: usize,
    pub n_g: usize,
    pub g_lo: f64,
    pub g_hi: f64,
    pub values: Vec<f64>,
}

impl GridSamples {
    pub fn dg(&self) -> f64 {
        (self.g_hi - self.g_lo) / self.n_g as f64
    }

    pub fn g_center(&self, j: usize) -> f64 {
        self.g_lo + (j as f64 + 0.5) * self.dg()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum InitialData {
    SeparableSum { terms: Vec<SeparableTerm> },
    VHomogeneous { components: Vec<GaussianComponent> },
    GridSamples(GridSamples),
}

/// A Gaussian with complex weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexGaussian {
    pub weight: Complex64,
    pub mean: f64,
    pub var: f64,
}

/// Conductance profile of one voltage Fourier coefficient of the initial data.
#[derive(Debug, Clone, PartialEq)]
pub enum ModeProfile {
    Mixture(Vec<ComplexGaussian>),
    /// Node values on `g_lo + j dg`.
    Tabulated {
        g_lo: f64,
        dg: f64,
        values: Vec<Complex64>,
    },
}

/// `p_{k,init}(g) = ∫₀^{V_F} p_init(v, g) e^{-ikωv} dv`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitMode {
    pub k: i64,
    pub profile: ModeProfile,
}

impl InitMode {
    pub fn is_zero(&self) -> bool {
        match &self.profile {
            ModeProfile::Mixture(c) => c.iter().all(|c| c.weight == Complex64::new(0.0, 0.0)),
            ModeProfile::Tabulated { values, .. } => values.iter().all(|z| z.norm() == 0.0),
        }
    }

    /// Unshifted coefficient `p_{k,init}(g)`.
    pub fn eval(&self, g: f64) -> Complex64 {
        match &self.profile {
            ModeProfile::Mixture(c) => c
                .iter()
                .map(|c| c.weight * gaussian(g, c.mean, c.var))
                .sum(),
            ModeProfile::Tabulated { g_lo, dg, values } => {
                let x = (g - g_lo) / dg;
                if x < 0.0 || x > (values.len() - 1) as f64 {
                    return Complex64::new(0.0, 0.0);
                }
                let j = (x as usize).min(values.len() - 2);
                let w = x - j as f64;
                values[j] * (1.0 - w) + values[j + 1] * w
            }
        }
    }

    /// Shifted profile `e^{-iμg} p_{k,init}(g)` for the phase rate `μ`.
    pub fn eval_shifted(&self, g: f64, mu: f64) -> Complex64 {
        Complex64::from_polar(1.0, -mu * g) * self.eval(g)
    }

    /// `∫ |p_{k,init}| dg`.
    pub fn l1_norm(&self) -> f64 {
        match &self.profile {
            ModeProfile::Mixture(c) => {
                if c.is_empty() {
                    return 0.0;
                }
                let lo = c
                    .iter()
                    .map(|c| c.mean - 12.0 * libm::sqrt(c.var))
                    .fold(f64::INFINITY, f64::min);
                let hi = c
                    .iter()
                    .map(|c| c.mean + 12.0 * libm::sqrt(c.var))
                    .fold(f64::NEG_INFINITY, f64::max);
                let smin = c
                    .iter()
                    .map(|c| libm::sqrt(c.var))
                    .fold(f64::INFINITY, f64::min);
                let panels = ((hi - lo) / (0.25 * smin)).ceil() as usize;
                GaussLegendre::new(8).integrate(lo, hi, panels, |g| self.eval(g).norm())
            }
            ModeProfile::Tabulated { dg, values, .. } => {
                let abs: Vec<f64> = values.iter().map(|z| z.norm()).collect();
                crate::quad::trapezoid(&abs, *dg)
            }
        }
    }
}

impl InitialData {
    /// `(1/V_F)(1 + A cos(2πv/V_F)) 𝒢(g; mean, var)`.
    pub fn cosine_gaussian(amplitude: f64, mean: f64, var: f64, v_f: f64) -> Self {
        InitialData::SeparableSum {
            terms: vec![SeparableTerm {
                trig: TrigPoly {
                    cos: vec![1.0 / v_f, amplitude / v_f],
                    sin: Vec::new(),
                },
                gaussian: GaussianComponent {
                    mean,
                    variance: var,
                    weight: 1.0,
                },
            }],
        }
    }

    /// Voltage-uniform Gaussian.
    pub fn gaussian(mean: f64, var: f64) -> Self {
        InitialData::VHomogeneous {
            components: vec![GaussianComponent {
                mean,
                variance: var,
                weight: 1.0,
            }],
        }
    }

    pub fn density(&self, v: f64, g: f64, v_f: f64) -> f64 {
        let omega = 2.0 * PI / v_f;
        match self {
            InitialData::SeparableSum { terms } => terms
                .iter()
                .map(|t| {
                    t.trig.eval(v, omega)
                        * t.gaussian.weight
                        * gaussian(g, t.gaussian.mean, t.gaussian.variance)
                })
                .sum(),
            InitialData::VHomogeneous { components } => {
                components
                    .iter()
                    .map(|c| c.weight * gaussian(g, c.mean, c.variance))
                    .sum::<f64>()
                    / v_f
            }
            InitialData::GridSamples(s) => {
                let dv = v_f / s.n_v as f64;
                let dg = s.dg();
                if g < s.g_lo || g >= s.g_hi {
                    return 0.0;
                }
                let i = ((v.rem_euclid(v_f)) / dv) as usize;
                let j = ((g - s.g_lo) / dg) as usize;
                s.values[j.min(s.n_g - 1) * s.n_v + i.min(s.n_v - 1)]
            }
        }
    }

    /// Voltage marginal `∫ p_init(v, g) dg`.
    pub fn v_marginal(&self, v: f64, v_f: f64) -> f64 {
        let omega = 2.0 * PI / v_f;
        match self {
            InitialData::SeparableSum { terms } => terms
                .iter()
                .map(|t| t.trig.eval(v, omega) * t.gaussian.weight)
                .sum(),
            InitialData::VHomogeneous { components } => {
                components.iter().map(|c| c.weight).sum::<f64>() / v_f
            }
            InitialData::GridSamples(s) => {
                let dv = v_f / s.n_v as f64;
                let i = ((v.rem_euclid(v_f) / dv) as usize).min(s.n_v - 1);
                (0..s.n_g).map(|j| s.values[j * s.n_v + i]).sum::<f64>() * s.dg()
            }
        }
    }

    pub fn mass(&self, v_f: f64) -> f64 {
        match self {
            InitialData::SeparableSum { terms } => terms
                .iter()
                .map(|t| v_f * t.trig.cos.first().copied().unwrap_or(0.0) * t.gaussian.weight)
                .sum(),
            InitialData::VHomogeneous { components } => components.iter().map(|c| c.weight).sum(),
            InitialData::GridSamples(s) => {
                s.values.iter().sum::<f64>() * s.dg() * v_f / s.n_v as f64
            }
        }
    }

    /// Conductance window holding the initial mass, `mean ± width·σ`.
    pub fn g_range(&self, width: f64) -> (f64, f64) {
        let comps: Vec<GaussianComponent> = match self {
            InitialData::SeparableSum { terms } => terms.iter().map(|t| t.gaussian).collect(),
            InitialData::VHomogeneous { components } => components.clone(),
            InitialData::GridSamples(s) => return (s.g_lo, s.g_hi),
        };
        let lo = comps
            .iter()
            .map(|c| c.mean - width * libm::sqrt(c.variance))
            .fold(f64::INFINITY, f64::min);
        let hi = comps
            .iter()
            .map(|c| c.mean + width * libm::sqrt(c.variance))
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Firing flux of the initial data, `∫₀^∞ g p_init(V_F, g) dg`.
    pub fn threshold_flux(&self, v_f: f64) -> f64 {
        let omega = 2.0 * PI / v_f;
        match self {
            InitialData::SeparableSum { terms } => terms
                .iter()
                .map(|t| {
                    t.trig.eval(v_f, omega)
                        * t.gaussian.weight
                        * positive_moment(t.gaussian.mean, t.gaussian.variance)
                })
                .sum(),
            InitialData::VHomogeneous { components } => {
                components
                    .iter()
                    .map(|c| c.weight * positive_moment(c.mean, c.variance))
                    .sum::<f64>()
                    / v_f
            }
            InitialData::GridSamples(s) => {
                let dg = s.dg();
                (0..s.n_g)
                    .map(|j| {
                        let g = s.g_center(j);
                        if g <= 0.0 {
                            return 0.0;
                        }
                        let seam = 0.5 * (s.values[j * s.n_v + s.n_v - 1] + s.values[j * s.n_v]);
                        g * seam * dg
                    })
                    .sum()
            }
        }
    }

    /// Checks unit mass and nonnegativity.
    pub fn validate(&self, v_f: f64) -> Result<()> {
        let mass = self.mass(v_f);
        if (mass - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInit(format!(
                "total mass {mass} differs from 1"
            )));
        }
        match self {
            InitialData::SeparableSum { terms } => {
                if terms.iter().any(|t| !(t.gaussian.variance > 0.0)) {
                    return Err(Error::InvalidInit(
                        "gaussian variance must be positive".into(),
                    ));
                }
                self.check_sampled_nonnegative(v_f, 1024)
            }
            InitialData::VHomogeneous { components } => {
                if components
                    .iter()
                    .any(|c| !(c.variance > 0.0) || c.weight < 0.0)
                {
                    return Err(Error::InvalidInit(
                        "components need positive variance and nonnegative weight".into(),
                    ));
                }
                Ok(())
            }
            InitialData::GridSamples(s) => {
                if s.values.len() != s.n_v * s.n_g || s.n_v == 0 || s.n_g == 0 || !(s.g_hi > s.g_lo)
                {
                    return Err(Error::InvalidInit(
                        "grid shape does not match sample count".into(),
                    ));
                }
                if s.values.iter().any(|&p| !(p >= 0.0)) {
                    return Err(Error::InvalidInit(
                        "grid samples must be nonnegative".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    fn check_sampled_nonnegative(&self, v_f: f64, n: usize) -> Result<()> {
        let InitialData::SeparableSum { terms } = self else {
            return Ok(());
        };
        let omega = 2.0 * PI / v_f;
        let (lo, hi) = self.g_range(10.0);
        let trig: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let v = v_f * i as f64 / n as f64;
                terms.iter().map(|t| t.trig.eval(v, omega)).collect()
            })
            .collect();
        let mut g_vals = vec![0.0; terms.len()];
        for j in 0..n {
            let g = lo + (hi - lo) * j as f64 / (n - 1) as f64;
            let mut scale = 0.0;
            for (gv, t) in g_vals.iter_mut().zip(terms) {
                *gv = t.gaussian.weight * gaussian(g, t.gaussian.mean, t.gaussian.variance);
                scale += gv.abs();
            }
            for row in &trig {
                let p: f64 = row.iter().zip(&g_vals).map(|(a, b)| a * b).sum();
                if p < -1e-12 * scale.max(f64::MIN_POSITIVE) {
                    return Err(Error::InvalidInit(format!(
                        "density negative ({p}) at g = {g}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Voltage Fourier coefficients `p_{k,init}` for `k = 0..=k_max`;
    /// negative modes follow by conjugation.
    pub fn fourier_init_coeffs(&self, k_max: usize, v_f: f64) -> Vec<InitMode> {
        (0..=k_max as i64)
            .map(|k| {
                let profile = match self {
                    InitialData::SeparableSum { terms } => ModeProfile::Mixture(
                        terms
                            .iter()
                            .map(|t| ComplexGaussian {
                                weight: t.trig.fourier(k, v_f) * t.gaussian.weight,
                                mean: t.gaussian.mean,
                                var: t.gaussian.variance,
                            })
                            .filter(|c| c.weight.norm() > 0.0)
                            .collect(),
                    ),
                    InitialData::VHomogeneous { components } => ModeProfile::Mixture(if k == 0 {
                        components
                            .iter()
                            .map(|c| ComplexGaussian {
                                weight: Complex64::new(c.weight, 0.0),
                                mean: c.mean,
                                var: c.variance,
                            })
                            .collect()
                    } else {
                        Vec::new()
                    }),
                    InitialData::GridSamples(s) => {
                        let dv = v_f / s.n_v as f64;
                        let omega = 2.0 * PI / v_f;
                        let phase: Vec<Complex64> = (0..s.n_v)
                            .map(|i| {
                                Complex64::from_polar(
                                    dv,
                                    -(k as f64) * omega * (i as f64 + 0.5) * dv,
                                )
                            })
                            .collect();
                        let values = (0..s.n_g)
                            .map(|j| {
                                s.values[j * s.n_v..(j + 1) * s.n_v]
                                    .iter()
                                    .zip(&phase)
                                    .map(|(p, e)| e * p)
                                    .sum()
                            })
                            .collect();
                        ModeProfile::Tabulated {
                            g_lo: s.g_center(0),
                            dg: s.dg(),
                            values,
                        }
                    }
                };
                InitMode { k, profile }
            })
            .collect()
    }
}

/// Positive velocity field `f(v)` on `[0, V_F]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum VelocityProfile {
    Constant {
        v_f: f64,
        value: f64,
    },
    /// `f(v) = intercept + slope·v`.
    Affine {
        v_f: f64,
        intercept: f64,
        slope: f64,
    },
    /// Node values on a uniform grid of `[0, V_F]`, linearly interpolated.
    Tabulated {
        v_f: f64,
        values: Vec<f64>,
    },
}

impl VelocityProfile {
    pub fn v_f(&self) -> f64 {
        match self {
            VelocityProfile::Constant { v_f, .. }
            | VelocityProfile::Affine { v_f, .. }
            | VelocityProfile::Tabulated { v_f, .. } => *v_f,
        }
    }

    pub fn f(&self, v: f64) -> f64 {
        match self {
            VelocityProfile::Constant { value, .. } => *value,
            VelocityProfile::Affine {
                intercept, slope, ..
            } => intercept + slope * v,
            VelocityProfile::Tabulated { v_f, values } => {
                let h = v_f / (values.len() - 1) as f64;
                let x = (v / h).clamp(0.0, (values.len() - 1) as f64);
                let j = (x as usize).min(values.len() - 2);
                let w = x - j as f64;
                values[j] * (1.0 - w) + values[j + 1] * w
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_f() > 0.0) {
            return Err(Error::InvalidParam("v_f must be positive"));
        }
        let positive = match self {
            VelocityProfile::Constant { value, .. } => *value > 0.0,
            VelocityProfile::Affine {
                v_f,
                intercept,
                slope,
            } => *intercept > 0.0 && intercept + slope * v_f > 0.0,
            VelocityProfile::Tabulated { values, .. } => {
                values.len() >= 2 && values.iter().all(|&f| f > 0.0 && f.is_finite())
            }
        };
        if positive {
            Ok(())
        } else {
            Err(Error::InvalidParam(
                "velocity profile must be positive on [0, v_f]",
            ))
        }
    }

    /// `u(v) = ∫₀^v dv'/f(v')`, exact for each profile kind.
    pub fn u_of_v(&self, v: f64) -> f64 {
        match self {
            VelocityProfile::Constant { value, .. } => v / value,
            VelocityProfile::Affine {
                intercept, slope, ..
            } => {
                if *slope == 0.0 {
                    v / intercept
                } else {
                    libm::log1p(slope * v / intercept) / slope
                }
            }
            VelocityProfile::Tabulated { v_f, values } => {
                let h = v_f / (values.len() - 1) as f64;
                let mut u = 0.0;
                let mut left = 0.0;
                for &f0 in &values[..values.len() - 1] {
                    if left >= v {
                        break;
                    }
                    let right = (left + h).min(v);
                    let f1 = self.f(right);
                    u += segment_inverse_integral(f0, f1, right - left);
                    left += h;
                }
                u
            }
        }
    }

    /// Transformed threshold `U_F`.
    pub fn u_f(&self) -> f64 {
        self.u_of_v(self.v_f())
    }
}

// ∫ over a segment of length h of 1/(linear from f0 to f1).
fn segment_inverse_integral(f0: f64, f1: f64, h: f64) -> f64 {
    let d = f1 - f0;
    let r = d / f0;
    if r.abs() < 1e-8 {
        h / f0 * (1.0 - 0.5 * r)
    } else {
        h * libm::log1p(r) / d
    }
}

/// A density on `[0, U_F]` sampled at the images `u(v_i)` of uniform voltage nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedDensity {
    pub u_f: f64,
    pub u: Vec<f64>,
    pub density: Vec<f64>,
    v_nodes: Vec<f64>,
}

impl TransformedDensity {
    /// `∫₀^{U_F} p̃ du`, evaluated through the pull-back `du = dv/f`.
    pub fn mass(&self, profile: &VelocityProfile) -> f64 {
        let h = self.v_nodes[1] - self.v_nodes[0];
        let pulled: Vec<f64> = self
            .v_nodes
            .iter()
            .zip(&self.density)
            .map(|(&v, &p)| p / profile.f(v))
            .collect();
        crate::quad::trapezoid(&pulled, h)
    }

    /// Inverse map back to voltage samples.
    pub fn inverse(&self, profile: &VelocityProfile) -> Vec<f64> {
        self.v_nodes
            .iter()
            .zip(&self.density)
            .map(|(&v, &p)| p / profile.f(v))
            .collect()
    }
}

/// Change of variable `u = ∫₀^v dv'/f`, `p̃(u(v)) = f(v) ρ(v)` for a voltage
/// density sampled at `n + 1` uniform nodes on `[0, V_F]`.
pub fn transform_velocity(
    profile: &VelocityProfile,
    rho_on_v: &[f64],
) -> Result<TransformedDensity> {
    profile.validate()?;
    if rho_on_v.len() < 2 {
        return Err(Error::InvalidInit(
            "need at least two density samples".into(),
        ));
    }
    let v_f = profile.v_f();
    let h = v_f / (rho_on_v.len() - 1) as f64;
    let mass = crate::quad::trapezoid(rho_on_v, h);
    if (mass - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidInit(format!(
            "voltage density integrates to {mass}, not 1"
        )));
    }
    let v_nodes: Vec<f64> = (0..rho_on_v.len()).map(|i| i as f64 * h).collect();
    let mut u = Vec::with_capacity(v_nodes.len());
    let mut acc = 0.0;
    u.push(0.0);
    for w in v_nodes.windows(2) {
        acc += segment_u(profile, w[0], w[1]);
        u.push(acc);
    }
    let density = v_nodes
        .iter()
        .zip(rho_on_v)
        .map(|(&v, &r)| profile.f(v) * r)
        .collect();
    Ok(TransformedDensity {
        u_f: profile.u_f(),
        u,
        density,
        v_nodes,
    })
}

fn segment_u(profile: &VelocityProfile, a: f64, b: f64) -> f64 {
    match profile {
        VelocityProfile::Tabulated { .. } => {
            segment_inverse_integral(profile.f(a), profile.f(b), b - a)
        }
        _ => profile.u_of_v(b) - profile.u_of_v(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_presets_validate() {
        assert!(ModelParams::figure1().validate().is_ok());
        assert!(ModelParams::figure2().validate().is_ok());
    }

    #[test]
    fn first_violation_is_named() {
        let p = ModelParams {
            g0: 0.0,
            ..ModelParams::figure1()
        };
        assert_eq!(
            p.validate(),
            Err(Error::InvalidParam("g0 must be positive"))
        );
        let p = ModelParams {
            a1: 0.0,
            ..ModelParams::figure1()
        };
        assert!(p.validate().is_err());
        assert!(p.validate_degenerate().is_ok());
        let p = ModelParams {
            epsilon: 0.0,
            ..ModelParams::figure1()
        };
        assert!(p.validate().is_ok());
        assert!(p.validate_kinetic().is_err());
    }

    #[test]
    fn cosine_coefficients() {
        let init = InitialData::cosine_gaussian(1.0, 5.0, 1.0, 1.0);
        init.validate(1.0).unwrap();
        let modes = init.fourier_init_coeffs(3, 1.0);
        let w = |m: &InitMode| match &m.profile {
            ModeProfile::Mixture(c) => c.iter().map(|c| c.weight).sum::<Complex64>(),
            _ => unreachable!(),
        };
        assert!((w(&modes[0]) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((w(&modes[1]) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!(modes[2].is_zero() && modes[3].is_zero());
    }

    #[test]
    fn homogeneous_has_only_mean_mode() {
        let modes = InitialData::gaussian(3.0, 2.0).fourier_init_coeffs(4, 1.0);
        assert!(!modes[0].is_zero());
        assert!(modes[1..].iter().all(InitMode::is_zero));
        assert!((modes[0].l1_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_separable_rejected() {
        let init = InitialData::cosine_gaussian(1.5, 0.0, 1.0, 1.0);
        assert!(init.validate(1.0).is_err());
    }

    #[test]
    fn affine_threshold() {
        let prof = VelocityProfile::Affine {
            v_f: 1.0,
            intercept: 2.0,
            slope: -1.0,
        };
        assert!((prof.u_f() - core::f64::consts::LN_2).abs() < 1e-15);
    }
}
