//! `vgk verify`: runs the check suite and writes `verify_report.json`.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::checks::{self, Criterion, GridAudit};
use crate::error::{AppError, AppResult};
use crate::output;

pub const REPORT: &str = "verify_report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    /// Criteria without large grid runs, well under a minute in release.
    Fast,
    /// Everything, including 512x512 grid runs (several minutes).
    Full,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub level: Level,
    pub passed: bool,
    pub wall_time_s: f64,
    pub criteria: Vec<Criterion>,
}

/// Runs the suite at `level`. `progress` sees each criterion as it finishes.
pub fn run_suite(level: Level, mut progress: impl FnMut(&Criterion)) -> Report {
    let start = Instant::now();
    let mut criteria = Vec::new();
    let mut push = |c: Criterion| {
        progress(&c);
        criteria.push(c);
    };
    push(checks::firing_suite());
    push(checks::ode_dichotomy());
    push(checks::modes_vs_ode());
    push(checks::homogenization_envelope(10.0));
    let mut audit = GridAudit::default();
    if level == Level::Full {
        push(checks::cross_solver(&[256, 512], &mut audit));
    }
    push(checks::fcl_dichotomy());
    if level == Level::Full {
        push(checks::eps_limit(256, &mut audit));
        push(checks::conservation(&audit));
    } else {
        push(checks::eps_limit(0, &mut audit));
    }
    Report {
        level,
        passed: criteria.iter().all(|c| c.passed),
        wall_time_s: start.elapsed().as_secs_f64(),
        criteria,
    }
}

pub fn verify(level: Level, out: &Path, mut progress: impl FnMut(&Criterion)) -> AppResult<Report> {
    std::fs::create_dir_all(out).map_err(|source| AppError::Io {
        path: out.to_path_buf(),
        source,
    })?;
    let report = run_suite(level, &mut progress);
    output::write_json(&out.join(REPORT), &report)?;
    Ok(report)
}
