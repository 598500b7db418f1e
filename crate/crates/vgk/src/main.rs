use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vgk::config::{InitSpec, KineticSolver, RunConfig, Solver};
use vgk::error::{AppError, AppResult};
use vgk::presets::{self, Preset};
use vgk::verify::{self, Level};
use vgk_core::grid::Transport;

#[derive(Parser)]
#[command(
    name = "vgk",
    version,
    about = "Voltage-conductance kinetic model solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gaussian moment ODE and its steady state.
    Ode(RunArgs),
    /// Fourier-mode solver.
    Modes(RunArgs),
    /// Finite-volume solver on a (v, g) grid.
    Pde(RunArgs),
    /// Fast-conductance limit model.
    Fcl(RunArgs),
    /// Epsilon sweep with a kinetic solver, plus the limit model.
    Sweep(RunArgs),
    /// Check suite; exits 4 when any check fails.
    Verify {
        #[arg(long, value_enum, default_value = "fast")]
        level: Level,
        #[arg(long)]
        out: PathBuf,
    },
    /// Figure replica runs.
    Preset {
        #[arg(value_enum)]
        which: Preset,
        #[arg(long, value_enum, default_value = "modes")]
        solver: KineticSolver,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    out: PathBuf,
    /// JSON run config; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    g0: Option<f64>,
    #[arg(long)]
    g1: Option<f64>,
    #[arg(long)]
    a0: Option<f64>,
    #[arg(long)]
    a1: Option<f64>,
    #[arg(long)]
    v_f: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Initial data as JSON, e.g. '{"kind":"gaussian","mean":0,"variance":1}'.
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    g_points: Option<usize>,
    #[arg(long)]
    n_v: Option<usize>,
    #[arg(long)]
    n_g: Option<usize>,
    #[arg(long)]
    g_lo: Option<f64>,
    #[arg(long)]
    g_hi: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    eps_list: Option<Vec<f64>>,
    #[arg(long)]
    dtau: Option<f64>,
    #[arg(long)]
    output_dt: Option<f64>,
    #[arg(long, value_parser = parse_transport)]
    transport: Option<Transport>,
    #[arg(long)]
    predictor_corrector: bool,
    #[arg(long, value_delimiter = ',')]
    snapshot_times: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    sweep_solver: Option<KineticSolver>,
    /// Skip the limit model in a sweep.
    #[arg(long)]
    no_limit: bool,
    #[arg(long)]
    fcl_nodes: Option<usize>,
}

fn parse_transport(s: &str) -> Result<Transport, String> {
    match s {
        "upwind" => Ok(Transport::Upwind),
        "minmod" => Ok(Transport::Minmod),
        _ => Err(format!("unknown transport {s:?} (upwind, minmod)")),
    }
}

impl RunArgs {
    fn config(&self, solver: Solver) -> AppResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    AppError::config(format!("cannot read {}: {e}", path.display()))
                })?;
                let mut cfg = RunConfig::from_json(&text)?;
                cfg.solver = solver;
                cfg
            }
            None => RunConfig::new(solver),
        };
        let p = &mut cfg.params;
        set(&mut p.g0, self.g0);
        set(&mut p.g1, self.g1);
        set(&mut p.a0, self.a0);
        set(&mut p.a1, self.a1);
        set(&mut p.v_f, self.v_f);
        set(&mut p.epsilon, self.epsilon);
        if let Some(init) = &self.init {
            cfg.init = serde_json::from_str::<InitSpec>(init)
                .map_err(|e| AppError::config(format!("bad --init: {e}")))?;
        }
        let n = &mut cfg.numerics;
        if self.dt.is_some() {
            n.dt = self.dt;
        }
        set(&mut n.t_end, self.t_end);
        set(&mut n.k_max, self.k_max);
        set(&mut n.g_points, self.g_points);
        set(&mut n.grid.n_v, self.n_v);
        set(&mut n.grid.n_g, self.n_g);
        if self.g_lo.is_some() {
            n.grid.g_lo = self.g_lo;
        }
        if self.g_hi.is_some() {
            n.grid.g_hi = self.g_hi;
        }
        set(&mut n.eps_list, self.eps_list.clone());
        if self.dtau.is_some() {
            n.dtau = self.dtau;
        }
        if self.output_dt.is_some() {
            n.output_dt = self.output_dt;
        }
        set(&mut n.transport, self.transport);
        n.predictor_corrector |= self.predictor_corrector;
        set(&mut n.snapshot_times, self.snapshot_times.clone());
        set(&mut n.sweep_solver, self.sweep_solver);
        if self.no_limit {
            n.include_limit = false;
        }
        set(&mut n.fcl_nodes, self.fcl_nodes);
        cfg.outputs.dir = Some(self.out.clone());
        Ok(cfg)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn execute(cfg: &RunConfig, out: &Path, notes: Vec<String>) -> ExitCode {
    match vgk::run::run_noted(cfg, out, notes) {
        Ok(m) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&m.outcome).unwrap_or_default()
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}

fn fail(e: AppError) -> ExitCode {
    eprintln!("vgk: {e}");
    ExitCode::from(e.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (solver, args) = match cli.command {
        Command::Ode(a) => (Solver::Ode, a),
        Command::Modes(a) => (Solver::Modes, a),
        Command::Pde(a) => (Solver::Pde, a),
        Command::Fcl(a) => (Solver::Fcl, a),
        Command::Sweep(a) => (Solver::Sweep, a),
        Command::Verify { level, out } => {
            let report = verify::verify(level, &out, |c| {
                let mut err = std::io::stderr().lock();
                let _ = err.write_all(c.summary().as_bytes());
            });
            return match report {
                Ok(r) if r.passed => ExitCode::SUCCESS,
                Ok(_) => ExitCode::from(4),
                Err(e) => fail(e),
            };
        }
        Command::Preset { which, solver, out } => {
            let mut cfg = presets::preset(which, solver);
            cfg.outputs.dir = Some(out.clone());
            return execute(&cfg, &out, presets::notes());
        }
    };
    match args.config(solver) {
        Ok(cfg) => execute(&cfg, &args.out, Vec::new()),
        Err(e) => fail(e),
    }
}
