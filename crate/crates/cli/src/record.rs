//! Serializable outputs of the `check`, `run` and `tail-rate` commands.
//!
//! A [`RunRecord`] holds only values determined by the config and seed, so
//! reruns are byte-identical. Wall-clock data goes to a separate
//! [`Timing`] sidecar.

use gini_ellipse::ordering::{DispersionConditionSet, ExperimentRecord, OrderPrediction, Verdict};
use gini_ellipse::tail::{IdentityReport, TailRateResult};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Software {
    pub name: String,
    pub version: String,
}

impl Software {
    pub fn current() -> Self {
        Software {
            name: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub conditions: DispersionConditionSet,
    pub predictions: Vec<OrderPrediction>,
}

/// The summary printed by `tail-rate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRateOutput {
    pub n: usize,
    pub m: usize,
    pub max_diag: f64,
    pub rate: f64,
    pub argmax_rows: Vec<usize>,
}

impl From<&TailRateResult> for TailRateOutput {
    fn from(r: &TailRateResult) -> Self {
        TailRateOutput {
            n: r.n,
            m: r.m,
            max_diag: r.max_diag,
            rate: r.rate,
            argmax_rows: r.argmax_rows.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Consistent,
    Violated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub software: Software,
    pub config: ExperimentConfig,
    pub conditions: Option<ConditionReport>,
    pub ordering: Option<ExperimentRecord>,
    pub tail_rate: Option<TailRateOutput>,
    pub tail_identity: Option<IdentityReport>,
    pub warnings: Vec<String>,
    pub status: RunStatus,
}

impl RunRecord {
    /// Verdicts of every ordering test kept in the record.
    pub fn verdicts(&self) -> Vec<Verdict> {
        self.ordering
            .iter()
            .flat_map(|o| o.tests.iter().map(|t| t.verdict))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Seconds since the Unix epoch.
    pub started_at: f64,
    pub finished_at: f64,
    pub wall_clock_seconds: f64,
}
