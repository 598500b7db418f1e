//! CSV and JSON artifacts. Numbers are written in scientific notation with
//! 17 significant digits so every `f64` round-trips.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use vgk_core::fcl::FclSample;
use vgk_core::grid::GridField;
use vgk_core::modes::{FiringSeries, SpectralField};
use vgk_core::ode::OdeTrajectory;

use crate::error::{AppError, AppResult};

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> AppError + '_ {
    move |source| AppError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> AppResult<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| AppError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> AppResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// RFC 4180 table with CRLF line ends.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> AppResult<Self> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        writer.write_record(header).map_err(csv_err)?;
        Ok(Self { writer })
    }

    pub fn row(&mut self, fields: &[String]) -> AppResult<()> {
        self.writer.write_record(fields).map_err(csv_err)
    }

    pub fn numbers(&mut self, values: &[f64]) -> AppResult<()> {
        let fields: Vec<String> = values.iter().map(|&x| num(x)).collect();
        self.row(&fields)
    }

    pub fn save(self, path: &Path) -> AppResult<()> {
        let bytes = self
            .writer
            .into_inner()
            .map_err(|e| AppError::config(e.to_string()))?;
        write_atomic(path, &bytes)
    }
}

fn csv_err(e: csv::Error) -> AppError {
    AppError::Io {
        path: PathBuf::new(),
        source: std::io::Error::other(e),
    }
}

/// `t, N, B, C, D`.
pub fn firing_series(path: &Path, series: &FiringSeries) -> AppResult<()> {
    let mut t = Table::new(&["t", "N", "B", "C", "D"])?;
    for p in &series.points {
        t.numbers(&[p.t, p.n, p.b, p.c, p.decay(series.epsilon)])?;
    }
    t.save(path)
}

/// `t, b, c, N`.
pub fn ode_trajectory(path: &Path, tr: &OdeTrajectory) -> AppResult<()> {
    let mut t = Table::new(&["t", "b", "c", "N"])?;
    for ((time, s), n) in tr.times.iter().zip(&tr.states).zip(&tr.firing) {
        t.numbers(&[*time, s.b, s.c, *n])?;
    }
    t.save(path)
}

/// `t, tau, N, rho_at_VF`.
pub fn fcl_trajectory(path: &Path, samples: &[FclSample]) -> AppResult<()> {
    let mut t = Table::new(&["t", "tau", "N", "rho_at_VF"])?;
    for s in samples {
        t.numbers(&[s.t, s.tau, s.n, s.rho_at_vf])?;
    }
    t.save(path)
}

/// `t, k, g, re, im` for `k = 0..=k_max`.
pub fn mode_snapshots(path: &Path, snaps: &[SpectralField]) -> AppResult<()> {
    let mut t = Table::new(&["t", "k", "g", "re", "im"])?;
    for s in snaps {
        let g = s.grid.points();
        for (k, m) in s.modes.iter().enumerate() {
            for (x, z) in g.iter().zip(m) {
                t.row(&[num(s.t), k.to_string(), num(*x), num(z.re), num(z.im)])?;
            }
        }
    }
    t.save(path)
}

/// `t, v, g, p` at cell centres.
pub fn grid_snapshots(path: &Path, snaps: &[GridField]) -> AppResult<()> {
    let mut t = Table::new(&["t", "v", "g", "p"])?;
    for f in snaps {
        let n_v = f.spec.n_v;
        for j in 0..f.spec.n_g {
            let g = f.g_center(j);
            for i in 0..n_v {
                t.numbers(&[f.t, (i as f64 + 0.5) * f.dv(), g, f.p[j * n_v + i]])?;
            }
        }
    }
    t.save(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn table_uses_crlf() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let mut t = Table::new(&["a", "b"]).unwrap();
        t.numbers(&[1.0, 2.0]).unwrap();
        t.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "a,b\r\n1.0000000000000000e0,2.0000000000000000e0\r\n");
    }
}
