//! Episode logs, serialization, and side-by-side run comparison.

use serde::{Deserialize, Serialize};

use super::{ScenarioConfig, SimError};
use crate::DOF;

/// Schema version stamped into every emitted log.
pub const LOG_SCHEMA_VERSION: u32 = 1;
/// A recorded barrier below this counts as a safety violation.
pub const VIOLATION_TOL: f64 = -1e-3;

/// One simulated substep. `q` and `barrier` describe the post-step state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub q: [f64; DOF],
    pub barrier: f64,
    pub active_pair: (String, String),
    pub intervened: bool,
    pub tracking_error: f64,
    pub gripper: bool,
    /// Filter failure for this substep, if any; the step was zero.
    pub fault: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub min_barrier: f64,
    pub violation_count: usize,
    pub intervention_rate: f64,
    pub mean_tracking_error: f64,
    pub final_ee_position: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub schema_version: u32,
    pub scenario: ScenarioConfig,
    pub summary: EpisodeSummary,
    pub records: Vec<StepRecord>,
}

impl EpisodeLog {
    /// Recomputes the summary from the raw records (final EE position cannot
    /// be reconstructed and is copied through).
    pub fn recompute_summary(&self) -> EpisodeSummary {
        summarize(&self.records, self.summary.final_ee_position)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("log serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::Malformed(e.to_string()))
    }

    /// CSV rendering, one row per substep. Columns:
    /// `schema_version,step,q0..q6,barrier,active_sphere,active_obstacle,`
    /// `intervened,tracking_error,gripper,fault`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("schema_version,step,q0,q1,q2,q3,q4,q5,q6,barrier,active_sphere,active_obstacle,intervened,tracking_error,gripper,fault\n");
        for r in &self.records {
            out.push_str(&format!("{},{}", self.schema_version, r.step));
            for v in r.q {
                out.push_str(&format!(",{v}"));
            }
            out.push_str(&format!(
                ",{},{},{},{},{},{},{}\n",
                r.barrier,
                csv_field(&r.active_pair.0),
                csv_field(&r.active_pair.1),
                r.intervened,
                r.tracking_error,
                r.gripper,
                csv_field(r.fault.as_deref().unwrap_or("")),
            ));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub(super) fn summarize(records: &[StepRecord], final_ee_position: [f64; 3]) -> EpisodeSummary {
    let n = records.len().max(1) as f64;
    let min_barrier = records.iter().map(|r| r.barrier).fold(f64::INFINITY, f64::min);
    EpisodeSummary {
        min_barrier,
        violation_count: records.iter().filter(|r| r.barrier < VIOLATION_TOL).count(),
        intervention_rate: records.iter().filter(|r| r.intervened).count() as f64 / n,
        mean_tracking_error: records.iter().map(|r| r.tracking_error).sum::<f64>() / n,
        final_ee_position,
    }
}

/// One side of a comparison report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunStats {
    pub filter_enabled: bool,
    pub min_barrier: f64,
    pub violation_count: usize,
    pub intervention_rate: f64,
    pub mean_tracking_error: f64,
}

impl RunStats {
    fn of(log: &EpisodeLog) -> Self {
        Self {
            filter_enabled: log.scenario.filter_enabled,
            min_barrier: log.summary.min_barrier,
            violation_count: log.summary.violation_count,
            intervention_rate: log.summary.intervention_rate,
            mean_tracking_error: log.summary.mean_tracking_error,
        }
    }
}

/// Side-by-side safety/tracking comparison of two runs of the same scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scenario: String,
    pub a: RunStats,
    pub b: RunStats,
}

impl std::fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "scenario: {}", self.scenario)?;
        writeln!(
            f,
            "{:<22} {:>14} {:>14}",
            "metric",
            label(&self.a),
            label(&self.b)
        )?;
        writeln!(
            f,
            "{:<22} {:>14.6} {:>14.6}",
            "min barrier [m]", self.a.min_barrier, self.b.min_barrier
        )?;
        writeln!(
            f,
            "{:<22} {:>14} {:>14}",
            "violations", self.a.violation_count, self.b.violation_count
        )?;
        writeln!(
            f,
            "{:<22} {:>14.4} {:>14.4}",
            "intervention rate", self.a.intervention_rate, self.b.intervention_rate
        )?;
        write!(
            f,
            "{:<22} {:>14.6} {:>14.6}",
            "mean tracking error", self.a.mean_tracking_error, self.b.mean_tracking_error
        )
    }
}

fn label(s: &RunStats) -> &'static str {
    if s.filter_enabled {
        "with-filter"
    } else {
        "no-filter"
    }
}

/// Tabulates two logs of the same scenario (modulo `filter_enabled`).
pub fn compare_runs(a: &EpisodeLog, b: &EpisodeLog) -> Result<ComparisonReport, SimError> {
    let mut ca = a.scenario.clone();
    let mut cb = b.scenario.clone();
    ca.filter_enabled = false;
    cb.filter_enabled = false;
    if ca != cb {
        return Err(SimError::ConfigMismatch(format!(
            "logs come from different configurations: \"{}\" vs \"{}\"",
            a.scenario.name, b.scenario.name
        )));
    }
    Ok(ComparisonReport {
        scenario: a.scenario.name.clone(),
        a: RunStats::of(a),
        b: RunStats::of(b),
    })
}
