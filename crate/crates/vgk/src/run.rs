//! Executes one [`RunConfig`] into an output directory.

use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use serde_json::json;
use vgk_core::fcl::{self, FclOutcome};
use vgk_core::grid::{self, GridField, GridRunConfig};
use vgk_core::modes::{self, FiringSeries, ModeRunConfig};
use vgk_core::ode;

use crate::config::{KineticSolver, RunConfig, Solver};
use crate::error::{AppError, AppResult};
use crate::manifest::{ErrorBudgets, RunManifest, RunStatus};
use crate::output;

pub const MANIFEST: &str = "manifest.json";

struct Artifacts {
    budgets: ErrorBudgets,
    outcome: serde_json::Value,
    notes: Vec<String>,
    files: Vec<String>,
}

impl Artifacts {
    fn new() -> Self {
        Self {
            budgets: ErrorBudgets::default(),
            outcome: json!({}),
            notes: Vec::new(),
            files: Vec::new(),
        }
    }
}

/// Runs the config and writes its files plus `manifest.json` into `out`.
/// The manifest is written on failure too, with status `failed`.
pub fn run(cfg: &RunConfig, out: &Path) -> AppResult<RunManifest> {
    run_noted(cfg, out, Vec::new())
}

/// [`run`] with extra manifest notes, for presets.
pub fn run_noted(cfg: &RunConfig, out: &Path, notes: Vec<String>) -> AppResult<RunManifest> {
    cfg.validate()?;
    std::fs::create_dir_all(out).map_err(|source| AppError::Io {
        path: out.to_path_buf(),
        source,
    })?;
    let start = Instant::now();
    let mut art = Artifacts::new();
    art.notes = notes;
    let result = dispatch(cfg, out, &mut art);
    let manifest = RunManifest {
        status: if result.is_ok() {
            RunStatus::Ok
        } else {
            RunStatus::Failed
        },
        config: cfg.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_s: start.elapsed().as_secs_f64(),
        error_budgets: art.budgets.finite(),
        outcome: art.outcome,
        notes: art.notes,
        files: art.files,
        error: result.as_ref().err().map(|e| e.to_string()),
    };
    output::write_json(&out.join(MANIFEST), &manifest)?;
    result.map(|_| manifest)
}

fn dispatch(cfg: &RunConfig, out: &Path, art: &mut Artifacts) -> AppResult<()> {
    match cfg.solver {
        Solver::Ode => run_ode(cfg, out, art),
        Solver::Modes => {
            let (series, budgets) =
                run_modes(cfg, cfg.params.epsilon, out, "firing.csv", true, art)?;
            art.budgets = budgets;
            art.outcome = series_summary(&series);
            Ok(())
        }
        Solver::Pde => {
            let (series, budgets) = run_pde(cfg, cfg.params.epsilon, out, "firing.csv", true, art)?;
            art.budgets = budgets;
            art.outcome = series_summary(&series);
            Ok(())
        }
        Solver::Fcl => run_fcl(cfg, out, art),
        Solver::Sweep => run_sweep(cfg, out, art),
    }
}

fn series_summary(s: &FiringSeries) -> serde_json::Value {
    let max = s.points.iter().map(|p| p.n).fold(0.0, f64::max);
    json!({ "t_end": s.t_end(), "final_rate": s.last().n, "max_rate": max, "samples": s.points.len() })
}

fn run_ode(cfg: &RunConfig, out: &Path, art: &mut Artifacts) -> AppResult<()> {
    let init = cfg.ode_state()?;
    let dt = cfg.numerics.dt.unwrap_or(1e-3);
    let tr = ode::integrate(init, &cfg.params, cfg.numerics.t_end, dt)?;
    output::ode_trajectory(&out.join("trajectory.csv"), &tr)?;
    art.files.push("trajectory.csv".into());
    let last = tr.last();
    let steady = match ode::classify(&cfg.params)? {
        ode::Classification::Convergent(r) => json!({
            "classification": "convergent",
            "b_star": r.state.b,
            "c_star": r.state.c,
            "trace": r.trace,
            "det": r.det,
            "stable": r.stable,
            "lower_bounds": [r.lower_bounds.0, r.lower_bounds.1],
            "residual": r.residual,
            "distance_at_t_end": ((last.b - r.state.b).powi(2) + (last.c - r.state.c).powi(2)).sqrt(),
        }),
        ode::Classification::Divergent => json!({ "classification": "divergent" }),
    };
    output::write_json(&out.join("steady_state.json"), &steady)?;
    art.files.push("steady_state.json".into());
    art.outcome =
        json!({ "b": last.b, "c": last.c, "diverged_at": tr.diverged_at, "steady_state": steady });
    Ok(())
}

fn run_modes(
    cfg: &RunConfig,
    eps: f64,
    out: &Path,
    name: &str,
    snapshots: bool,
    art: &mut Artifacts,
) -> AppResult<(FiringSeries, ErrorBudgets)> {
    let init = cfg.kinetic_init()?;
    let p = cfg.params.with_epsilon(eps);
    let n = &cfg.numerics;
    let dt = n.dt.unwrap_or(1e-3).min(eps / 10.0);
    let mc = ModeRunConfig {
        t_end: n.t_end,
        dt,
        k_max: n.k_max,
        g_points: n.g_points,
        snapshot_times: if snapshots {
            n.snapshot_times.clone()
        } else {
            Vec::new()
        },
    };
    let r = modes::run(&init, &p, &mc)?;
    output::firing_series(&out.join(name), &r.series)?;
    art.files.push(name.into());
    if !r.snapshots.is_empty() {
        output::mode_snapshots(&out.join("snapshots_modes.csv"), &r.snapshots)?;
        art.files.push("snapshots_modes.csv".into());
    }
    let d = r.diagnostics;
    let budgets = ErrorBudgets {
        truncation: d.truncation_bound,
        pruned_modes: d.pruned_bound,
        mass_drift: d.mass_drift,
        clamped_steps: d.clamped_steps as f64,
        min_raw_rate: d.min_raw_rate,
        ..Default::default()
    };
    Ok((r.series, budgets))
}

fn run_pde(
    cfg: &RunConfig,
    eps: f64,
    out: &Path,
    name: &str,
    snapshots: bool,
    art: &mut Artifacts,
) -> AppResult<(FiringSeries, ErrorBudgets)> {
    let init = cfg.kinetic_init()?;
    let p = cfg.params.with_epsilon(eps);
    let n = &cfg.numerics;
    let spec = cfg.grid_spec(&init)?;
    art.notes.push(format!(
        "grid eps={eps}: {}x{} cells, g in [{}, {}] with g = 0 on a cell face",
        spec.n_v, spec.n_g, spec.g_lo, spec.g_hi
    ));
    let field = GridField::from_initial(&init, p.v_f, spec)?;
    let gc = GridRunConfig {
        t_end: n.t_end,
        dt_max: n.dt.unwrap_or(f64::INFINITY).min(eps / 10.0),
        output_dt: n.output_dt.unwrap_or(1e-2),
        snapshot_times: if snapshots {
            n.snapshot_times.clone()
        } else {
            Vec::new()
        },
        options: cfg.step_options(),
    };
    let r = grid::run(field, &p, &gc)?;
    output::firing_series(&out.join(name), &r.series)?;
    art.files.push(name.into());
    if !r.snapshots.is_empty() {
        output::grid_snapshots(&out.join("snapshots_grid.csv"), &r.snapshots)?;
        art.files.push("snapshots_grid.csv".into());
    }
    let d = r.diagnostics;
    let budgets = ErrorBudgets {
        mass_drift: d.mass_drift_rate,
        g_leakage: d.max_leakage,
        min_density: d.min_density,
        min_raw_rate: d.min_raw_rate,
        ..Default::default()
    };
    Ok((r.series, budgets))
}

fn run_fcl(cfg: &RunConfig, out: &Path, art: &mut Artifacts) -> AppResult<()> {
    art.outcome = write_fcl(cfg, out, &mut art.files)?;
    Ok(())
}

fn write_fcl(cfg: &RunConfig, out: &Path, files: &mut Vec<String>) -> AppResult<serde_json::Value> {
    let state = cfg.marginal()?;
    let dtau = cfg.numerics.dtau.unwrap_or(state.v_f / 4096.0);
    let p = cfg.params.with_epsilon(0.0);
    let r = fcl::evolve(&state, &p, cfg.numerics.t_end, dtau)?;
    output::fcl_trajectory(&out.join("fcl_trajectory.csv"), &r.trajectory)?;
    let outcome = match r.outcome {
        FclOutcome::Periodic { period } => json!({ "type": "periodic", "T": period }),
        FclOutcome::Blowup {
            t_star,
            v_star,
            tau_star,
        } => {
            json!({ "type": "blowup", "T_star": t_star, "v_star": v_star, "tau_star": tau_star })
        }
    };
    output::write_json(&out.join("fcl_outcome.json"), &outcome)?;
    files.push("fcl_trajectory.csv".into());
    files.push("fcl_outcome.json".into());
    Ok(outcome)
}

/// Worker count from `VGK_THREADS`, else the available parallelism.
pub fn thread_count() -> usize {
    std::env::var("VGK_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
        .unwrap_or(1)
}

/// File name of the firing series for one `ε`.
pub fn eps_file(eps: f64) -> String {
    format!("firing_eps_{eps}.csv")
}

fn run_sweep(cfg: &RunConfig, out: &Path, art: &mut Artifacts) -> AppResult<()> {
    let eps_list = &cfg.numerics.eps_list;
    let next = Mutex::new(0usize);
    type JobResult = AppResult<(FiringSeries, ErrorBudgets, Vec<String>)>;
    let results: Mutex<Vec<Option<JobResult>>> =
        Mutex::new((0..eps_list.len()).map(|_| None).collect());
    let workers = thread_count().min(eps_list.len()).max(1);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = {
                    let mut g = next.lock().unwrap();
                    let i = *g;
                    *g += 1;
                    i
                };
                let Some(&eps) = eps_list.get(i) else { break };
                let mut local = Artifacts::new();
                let name = eps_file(eps);
                let r = match cfg.numerics.sweep_solver {
                    KineticSolver::Modes => run_modes(cfg, eps, out, &name, false, &mut local),
                    KineticSolver::Pde => run_pde(cfg, eps, out, &name, false, &mut local),
                };
                let r = r.map(|(s, b)| (s, b, local.notes));
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    let mut budgets: Option<ErrorBudgets> = None;
    let mut per_eps = Vec::new();
    let mut first_err = None;
    for (eps, r) in eps_list.iter().zip(results.into_inner().unwrap()) {
        match r.expect("every job reports") {
            Ok((series, b, notes)) => {
                budgets.get_or_insert(b).merge(&b);
                art.files.push(eps_file(*eps));
                art.notes.extend(notes);
                let mut summary = series_summary(&series);
                summary["epsilon"] = json!(eps);
                per_eps.push(summary);
            }
            Err(e) => {
                per_eps.push(json!({ "epsilon": eps, "error": e.to_string() }));
                first_err.get_or_insert(e);
            }
        }
    }
    art.budgets = budgets.unwrap_or_default();
    let mut outcome = json!({ "solver": cfg.numerics.sweep_solver, "runs": per_eps });
    if cfg.numerics.include_limit {
        match write_fcl(cfg, out, &mut art.files) {
            Ok(v) => outcome["limit"] = v,
            Err(e) => {
                outcome["limit"] = json!({ "error": e.to_string() });
            }
        }
    }
    art.outcome = outcome;
    match first_err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
