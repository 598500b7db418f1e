//! JSON run configuration.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use vgk_core::fcl::FclState;
use vgk_core::firing::{solve_limit_firing, GaussianState};
use vgk_core::grid::{GridSpec, StepOptions, Transport};
use vgk_core::{InitialData, ModelParams};

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Ode,
    Modes,
    Pde,
    Fcl,
    Sweep,
}

/// Kinetic solver behind a sweep or preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum KineticSolver {
    #[default]
    Modes,
    Pde,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitSpec {
    /// Voltage-uniform Gaussian in `g`.
    Gaussian {
        mean: f64,
        variance: f64,
    },
    /// `(1 + A cos(2πv/V_F))/V_F · 𝒢(g; mean, variance)`.
    Cosine {
        amplitude: f64,
        mean: f64,
        variance: f64,
    },
    /// Cosine marginal with the conductance Gaussian centred on the limit
    /// model's quasi-steady state at `t = 0`.
    QuasiSteady {
        amplitude: f64,
    },
    Data {
        data: InitialData,
    },
    /// Tabulated voltage marginal on `n + 1` nodes, limit model only.
    Marginal {
        values: Vec<f64>,
    },
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec::QuasiSteady { amplitude: -0.2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub n_v: usize,
    pub n_g: usize,
    pub g_lo: Option<f64>,
    pub g_hi: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_v: 256,
            n_g: 256,
            g_lo: None,
            g_hi: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Numerics {
    /// Time step; for the grid solver an upper bound under the CFL limit.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub k_max: usize,
    pub g_points: usize,
    pub grid: GridConfig,
    pub eps_list: Vec<f64>,
    pub dtau: Option<f64>,
    pub output_dt: Option<f64>,
    pub transport: Transport,
    pub predictor_corrector: bool,
    pub snapshot_times: Vec<f64>,
    pub sweep_solver: KineticSolver,
    /// Also run the limit model next to a sweep.
    pub include_limit: bool,
    pub fcl_nodes: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            dt: None,
            t_end: 10.0,
            k_max: 16,
            g_points: 2048,
            grid: GridConfig::default(),
            eps_list: Vec::new(),
            dtau: None,
            output_dt: None,
            transport: Transport::Upwind,
            predictor_corrector: false,
            snapshot_times: Vec::new(),
            sweep_solver: KineticSolver::Modes,
            include_limit: true,
            fcl_nodes: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Outputs {
    pub dir: Option<PathBuf>,
}

fn default_params() -> ModelParams {
    ModelParams::figure2()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub solver: Solver,
    #[serde(default = "default_params")]
    pub params: ModelParams,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub outputs: Outputs,
}

impl RunConfig {
    pub fn new(solver: Solver) -> Self {
        Self {
            solver,
            params: default_params(),
            init: InitSpec::default(),
            numerics: Numerics::default(),
            outputs: Outputs::default(),
        }
    }

    pub fn from_json(text: &str) -> AppResult<Self> {
        serde_json::from_str(text).map_err(|e| AppError::config(format!("bad config: {e}")))
    }

    pub fn validate(&self) -> AppResult<()> {
        let n = &self.numerics;
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(n.t_end) {
            return Err(AppError::config("t_end must be positive"));
        }
        for (name, v) in [("dt", n.dt), ("dtau", n.dtau), ("output_dt", n.output_dt)] {
            if let Some(v) = v {
                if !positive(v) {
                    return Err(AppError::config(format!("{name} must be positive")));
                }
            }
        }
        if n.grid.n_v < 2 || n.grid.n_g < 4 || n.g_points < 2 || n.fcl_nodes < 2 {
            return Err(AppError::config("grid sizes too small"));
        }
        if n.snapshot_times
            .iter()
            .any(|t| !(*t >= 0.0 && *t <= n.t_end))
        {
            return Err(AppError::config("snapshot times must lie in [0, t_end]"));
        }
        let p = &self.params;
        match self.solver {
            Solver::Fcl => p.validate_degenerate()?,
            Solver::Ode => p.validate_degenerate()?,
            Solver::Modes | Solver::Pde => p.validate_kinetic()?,
            Solver::Sweep => {
                p.validate_degenerate()?;
                if n.eps_list.is_empty() {
                    return Err(AppError::config("sweep needs a nonempty eps_list"));
                }
                if n.eps_list.iter().any(|e| !positive(*e)) {
                    return Err(AppError::config("every sweep epsilon must be positive"));
                }
            }
        }
        if matches!(self.init, InitSpec::Marginal { .. }) && self.solver != Solver::Fcl {
            return Err(AppError::config(
                "a tabulated marginal only drives the limit model",
            ));
        }
        Ok(())
    }

    /// Initial rate and quasi-steady conductance Gaussian of the limit model.
    fn quasi_steady(&self, amplitude: f64) -> AppResult<(f64, f64, f64)> {
        let p = &self.params;
        let rho = (1.0 + amplitude) / p.v_f;
        let n0 = solve_limit_firing(rho, p)?.rate().ok_or_else(|| {
            AppError::config("limit model has no firing rate at t = 0 for this marginal")
        })?;
        Ok((n0, p.g_in(n0), p.diffusion(n0)))
    }

    pub fn kinetic_init(&self) -> AppResult<InitialData> {
        let v_f = self.params.v_f;
        let init = match &self.init {
            InitSpec::Gaussian { mean, variance } => InitialData::gaussian(*mean, *variance),
            InitSpec::Cosine {
                amplitude,
                mean,
                variance,
            } => InitialData::cosine_gaussian(*amplitude, *mean, *variance, v_f),
            InitSpec::QuasiSteady { amplitude } => {
                let (_, mean, var) = self.quasi_steady(*amplitude)?;
                InitialData::cosine_gaussian(*amplitude, mean, var, v_f)
            }
            InitSpec::Data { data } => data.clone(),
            InitSpec::Marginal { .. } => {
                return Err(AppError::config("kinetic solvers need a density in (v, g)"))
            }
        };
        init.validate(v_f)?;
        Ok(init)
    }

    pub fn marginal(&self) -> AppResult<FclState> {
        let v_f = self.params.v_f;
        let nodes = self.numerics.fcl_nodes;
        let w = 2.0 * PI / v_f;
        let state = match &self.init {
            InitSpec::Cosine { amplitude, .. } | InitSpec::QuasiSteady { amplitude } => {
                let a = *amplitude;
                FclState::from_fn(v_f, nodes, |v| (1.0 + a * (w * v).cos()) / v_f)
            }
            InitSpec::Gaussian { .. } => FclState::uniform(v_f, nodes),
            InitSpec::Data { data } => {
                let mut s = FclState::from_fn(v_f, nodes, |v| data.v_marginal(v, v_f));
                let h = v_f / nodes as f64;
                let mass = vgk_core::quad::trapezoid(&s.rho, h);
                s.rho.iter_mut().for_each(|r| *r /= mass);
                s
            }
            InitSpec::Marginal { values } => FclState {
                v_f,
                rho: values.clone(),
            },
        };
        state.validate()?;
        Ok(state)
    }

    pub fn ode_state(&self) -> AppResult<GaussianState> {
        let (b, c) = match &self.init {
            InitSpec::Gaussian { mean, variance } | InitSpec::Cosine { mean, variance, .. } => {
                (*mean, *variance)
            }
            InitSpec::QuasiSteady { amplitude } => {
                let (_, m, v) = self.quasi_steady(*amplitude)?;
                (m, v)
            }
            _ => {
                return Err(AppError::config(
                    "the moment ODE needs a Gaussian initial state",
                ))
            }
        };
        if !(c > 0.0) {
            return Err(AppError::config("initial variance must be positive"));
        }
        Ok(GaussianState::new(b, c))
    }

    /// Grid window: explicit bounds, else `[-10, b_max + 12√c_max]` from the
    /// moment ODE over the run.
    pub fn grid_spec(&self, init: &InitialData) -> AppResult<GridSpec> {
        let g = self.numerics.grid;
        let (lo0, hi0) = init.g_range(6.0);
        let g_lo = g.g_lo.unwrap_or((-10.0f64).min(lo0));
        let g_hi = match g.g_hi {
            Some(h) => h,
            None => {
                let (mean, var) = moments_of(init);
                let p = self.params;
                let horizon = self.numerics.t_end / p.epsilon.max(1e-12);
                let tr = vgk_core::ode::integrate(
                    GaussianState::new(mean, var),
                    &p,
                    horizon.min(1e3),
                    1e-2,
                )?;
                let b = tr.states.iter().map(|s| s.b).fold(hi0, f64::max);
                let c = tr.states.iter().map(|s| s.c).fold(var, f64::max);
                (b + 12.0 * c.sqrt()).max(hi0).ceil()
            }
        };
        if !(g_hi > g_lo) {
            return Err(AppError::config("grid needs g_hi > g_lo"));
        }
        Ok(GridSpec::aligned(g.n_v, g.n_g, g_lo, g_hi))
    }

    pub fn step_options(&self) -> StepOptions {
        StepOptions {
            transport: self.numerics.transport,
            predictor_corrector: self.numerics.predictor_corrector,
            ..Default::default()
        }
    }
}

// Mean and variance of the conductance marginal.
fn moments_of(init: &InitialData) -> (f64, f64) {
    let comps: Vec<(f64, f64, f64)> = match init {
        InitialData::SeparableSum { terms } => terms
            .iter()
            .map(|t| {
                (
                    t.gaussian.weight * t.trig.cos.first().copied().unwrap_or(0.0),
                    t.gaussian.mean,
                    t.gaussian.variance,
                )
            })
            .collect(),
        InitialData::VHomogeneous { components } => components
            .iter()
            .map(|c| (c.weight, c.mean, c.variance))
            .collect(),
        InitialData::GridSamples(s) => {
            let mid = 0.5 * (s.g_lo + s.g_hi);
            let half = 0.5 * (s.g_hi - s.g_lo);
            return (mid, (half * half / 3.0).max(1e-6));
        }
    };
    let w: f64 = comps.iter().map(|c| c.0).sum();
    let mean = comps.iter().map(|c| c.0 * c.1).sum::<f64>() / w;
    let var = comps
        .iter()
        .map(|c| c.0 * (c.2 + (c.1 - mean).powi(2)))
        .sum::<f64>()
        / w;
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_json() {
        let c = RunConfig::from_json(r#"{"solver": "ode"}"#).unwrap();
        assert_eq!(c.params, ModelParams::figure2());
        c.validate().unwrap();
    }

    #[test]
    fn full_json_round_trip() {
        let mut c = RunConfig::new(Solver::Sweep);
        c.numerics.eps_list = vec![0.5, 0.1];
        c.init = InitSpec::Cosine {
            amplitude: 0.3,
            mean: 5.0,
            variance: 2.0,
        };
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = RunConfig::new(Solver::Sweep);
        assert!(c.validate().is_err());
        c.numerics.eps_list = vec![0.0];
        assert!(c.validate().is_err());
        let mut c = RunConfig::new(Solver::Modes);
        c.numerics.t_end = -1.0;
        assert!(c.validate().is_err());
        assert!(RunConfig::from_json(r#"{"solver": "warp"}"#).is_err());
    }

    #[test]
    fn quasi_steady_init_starts_at_limit_rate() {
        let c = RunConfig::new(Solver::Modes);
        let init = c.kinetic_init().unwrap();
        let (n0, _, _) = c.quasi_steady(-0.2).unwrap();
        assert!((init.threshold_flux(1.0) - n0).abs() < 1e-12 * n0);
    }

    #[test]
    fn automatic_window_covers_steady_state() {
        let c = RunConfig::new(Solver::Pde);
        let spec = c.grid_spec(&c.kinetic_init().unwrap()).unwrap();
        assert!(spec.g_lo <= -10.0 && spec.g_hi >= 40.0);
    }
}
