//! Figure-replica configurations.

use vgk_core::ModelParams;

use crate::config::{InitSpec, KineticSolver, RunConfig, Solver};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    Figure1,
    Figure2,
}

/// Sweep over ε with the limit model alongside. Both start from the marginal
/// `1 - 0.2 cos(2πv)` and the conductance Gaussian that is quasi-steady for
/// the limit model's initial rate.
pub fn preset(which: Preset, solver: KineticSolver) -> RunConfig {
    let mut cfg = RunConfig::new(Solver::Sweep);
    cfg.init = InitSpec::QuasiSteady { amplitude: -0.2 };
    cfg.numerics.sweep_solver = solver;
    cfg.numerics.include_limit = true;
    cfg.numerics.output_dt = Some(1e-3);
    cfg.numerics.dt = Some(1e-3);
    match which {
        Preset::Figure1 => {
            cfg.params = ModelParams::figure1();
            cfg.numerics.eps_list = vec![0.5, 0.25, 0.1];
            cfg.numerics.t_end = 1.0;
        }
        Preset::Figure2 => {
            cfg.params = ModelParams::figure2();
            cfg.numerics.eps_list = vec![0.5, 0.1, 0.02];
            cfg.numerics.t_end = 2.0;
        }
    }
    if solver == KineticSolver::Pde {
        cfg.numerics.grid.n_v = 128;
        cfg.numerics.grid.n_g = 128;
    }
    cfg
}

pub fn notes() -> Vec<String> {
    vec![
        "V_F = 1 (the reference parameter sets leave it open)".into(),
        "initial data: marginal 1 - 0.2 cos(2 pi v), conductance Gaussian quasi-steady at the limit rate N(0)".into(),
    ]
}
