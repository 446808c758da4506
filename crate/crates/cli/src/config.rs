//! Experiment configuration files.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "model_x": {"family": "elliptical", "mu": [0, 0], "sigma": [[1, 0], [0, 1]], "radial": {"kind": "normal"}},
//!   "model_y": {"family": "elliptical", "mu": [0, 0], "sigma": [[2, 0], [0, 2]], "radial": {"kind": "normal"}},
//!   "sample_count": 1000000,
//!   "seed": 7,
//!   "tests": ["conditions", "st", "tail_rate"]
//! }
//! ```
//!
//! Every field but `schema_version` and `model_x` has a default.

use std::path::{Path, PathBuf};

use gini_ellipse::elliptical::Model;
use gini_ellipse::gini::{GiniConvention, DEFAULT_ENUMERATION_CAP};
use gini_ellipse::ordering::{DEFAULT_GRID_SIZE, DEFAULT_Z};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SAMPLE_COUNT: usize = 1_000_000;
/// Smallest sample size accepted for the st and icx tests.
pub const MIN_TEST_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Conditions,
    St,
    Icx,
    TailRate,
    TailIdentity,
}

impl TestKind {
    fn needs_pair(self) -> bool {
        matches!(self, TestKind::Conditions | TestKind::St | TestKind::Icx)
    }
}

fn default_sample_count() -> usize {
    DEFAULT_SAMPLE_COUNT
}

fn default_tests() -> Vec<TestKind> {
    vec![TestKind::Conditions, TestKind::St, TestKind::Icx]
}

fn default_grid_size() -> usize {
    DEFAULT_GRID_SIZE
}

fn default_z() -> f64 {
    DEFAULT_Z
}

fn default_true() -> bool {
    true
}

fn default_thresholds() -> Vec<f64> {
    vec![1.0, 2.0, 3.0, 4.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model_x: Model,
    #[serde(default)]
    pub model_y: Option<Model>,
    #[serde(default = "default_sample_count")]
    pub sample_count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub convention: GiniConvention,
    #[serde(default = "default_tests")]
    pub tests: Vec<TestKind>,
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    #[serde(default = "default_z")]
    pub z_threshold: f64,
    /// Share the underlying draws between the two models.
    #[serde(default = "default_true")]
    pub coupled: bool,
    /// Thresholds for the tail identity table.
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
}

impl ExperimentConfig {
    /// A config with defaults for everything but the models.
    pub fn new(model_x: Model, model_y: Option<Model>) -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            model_x,
            model_y,
            sample_count: DEFAULT_SAMPLE_COUNT,
            seed: 0,
            convention: GiniConvention::default(),
            tests: default_tests(),
            grid_size: DEFAULT_GRID_SIZE,
            z_threshold: DEFAULT_Z,
            coupled: true,
            thresholds: default_thresholds(),
            output_path: None,
        }
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CliError::Input(format!("bad config: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn wants(&self, kind: TestKind) -> bool {
        self.tests.contains(&kind)
    }

    /// The second model, required by the pairwise tests.
    pub fn pair(&self) -> CliResult<(&Model, &Model)> {
        match &self.model_y {
            Some(y) => Ok((&self.model_x, y)),
            None => Err(CliError::Input(
                "model_y is required for this command".into(),
            )),
        }
    }

    /// Checks that apply to every command, ignoring the `tests` list.
    pub fn validate_basic(&self) -> CliResult<()> {
        let mut relaxed = self.clone();
        relaxed.tests.clear();
        relaxed.validate()
    }

    /// Structural checks plus the requirements of each requested test.
    pub fn validate(&self) -> CliResult<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Input(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.sample_count == 0 {
            return Err(CliError::Input("sample_count must be positive".into()));
        }
        if self.grid_size < 2 {
            return Err(CliError::Input("grid_size must be at least 2".into()));
        }
        if !(self.z_threshold > 0.0 && self.z_threshold.is_finite()) {
            return Err(CliError::Input("z_threshold must be positive".into()));
        }
        if self.thresholds.iter().any(|t| !t.is_finite()) {
            return Err(CliError::Input("thresholds must be finite".into()));
        }
        if let Some(y) = &self.model_y {
            if y.dim() != self.model_x.dim() {
                return Err(CliError::Input(format!(
                    "model dimensions differ: {} vs {}",
                    self.model_x.dim(),
                    y.dim()
                )));
            }
        }
        let statistical = self.wants(TestKind::St) || self.wants(TestKind::Icx);
        if statistical && self.sample_count < MIN_TEST_SAMPLES {
            return Err(CliError::Input(format!(
                "st/icx tests need sample_count >= {MIN_TEST_SAMPLES}"
            )));
        }
        if self.tests.iter().any(|t| t.needs_pair()) {
            let (x, y) = self.pair()?;
            if statistical && !x.same_family(y) {
                return Err(CliError::Hypothesis(
                    "st/icx tests compare models with a common radial and mixing law".into(),
                ));
            }
        }
        let tail = self.wants(TestKind::TailRate) || self.wants(TestKind::TailIdentity);
        let n = self.model_x.dim();
        if tail && !(2..=DEFAULT_ENUMERATION_CAP).contains(&n) {
            return Err(CliError::Input(format!(
                "tail tests need 2 <= n <= {DEFAULT_ENUMERATION_CAP}, got {n}"
            )));
        }
        Ok(())
    }
}
