use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// Numerical error indicators gathered during a run. Unused entries stay 0.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorBudgets {
    /// Bound on firing contributions of voltage modes beyond `k_max`.
    pub truncation: f64,
    /// Bound on modes skipped below round-off.
    pub pruned_modes: f64,
    /// Mass drift per unit time (grid) or absolute drift (modes).
    pub mass_drift: f64,
    /// Largest mass within two cells of the conductance boundaries.
    pub g_leakage: f64,
    pub min_density: f64,
    /// Steps where the raw firing rate went negative and was clamped.
    pub clamped_steps: f64,
    pub min_raw_rate: f64,
}

impl ErrorBudgets {
    /// Worst entry of each field across `other` and `self`.
    pub fn merge(&mut self, o: &ErrorBudgets) {
        self.truncation = self.truncation.max(o.truncation);
        self.pruned_modes = self.pruned_modes.max(o.pruned_modes);
        self.mass_drift = self.mass_drift.max(o.mass_drift);
        self.g_leakage = self.g_leakage.max(o.g_leakage);
        self.min_density = self.min_density.min(o.min_density);
        self.clamped_steps += o.clamped_steps;
        self.min_raw_rate = self.min_raw_rate.min(o.min_raw_rate);
    }

    /// Replaces non-finite entries so the manifest stays valid JSON numbers.
    pub fn finite(mut self) -> Self {
        for x in [
            &mut self.truncation,
            &mut self.pruned_modes,
            &mut self.mass_drift,
            &mut self.g_leakage,
            &mut self.min_density,
            &mut self.clamped_steps,
            &mut self.min_raw_rate,
        ] {
            if x.is_nan() {
                *x = f64::MAX;
            } else if x.is_infinite() {
                *x = f64::MAX.copysign(*x);
            }
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub status: RunStatus,
    pub config: RunConfig,
    pub code_version: String,
    pub wall_time_s: f64,
    pub error_budgets: ErrorBudgets,
    pub outcome: serde_json::Value,
    /// Choices made by the harness that the config did not pin down.
    pub notes: Vec<String>,
    pub files: Vec<String>,
    pub error: Option<String>,
}
