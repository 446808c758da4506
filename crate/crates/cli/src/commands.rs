//! The work behind each subcommand, independent of argument parsing.

use gini_ellipse::elliptical::{Model, SampleMatrix};
use gini_ellipse::gini::{gini_order_stat, gini_rows, GiniConvention};
use gini_ellipse::ordering::{
    classify_dispersion, predict_orderings, run_ordering_experiment, ExperimentOptions,
    FamilyTraits, Relation, Verdict,
};
use gini_ellipse::stream::derive_seed;
use gini_ellipse::tail::{
    ld_rate, max_diag_search, tail_identity_check_model, IdentityReport, RateBound,
};
use gini_ellipse::{Error as CoreError, SymMatrix};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, TestKind};
use crate::error::{CliError, CliResult};
use crate::record::{ConditionReport, RunRecord, RunStatus, Software, TailRateOutput};

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
}

impl Overrides {
    pub fn apply(self, mut cfg: ExperimentConfig) -> ExperimentConfig {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = self.samples {
            cfg.sample_count = n;
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    X,
    Y,
}

/// Sidecar written next to sampled draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub software: Software,
    pub seed: u64,
    pub sample_count: usize,
    pub dim: usize,
    pub which: Which,
    pub model: Model,
}

pub fn cmd_sample(cfg: &ExperimentConfig, which: Which) -> CliResult<(SampleMatrix, SampleMeta)> {
    cfg.validate_basic()?;
    let model = match which {
        Which::X => &cfg.model_x,
        Which::Y => cfg
            .model_y
            .as_ref()
            .ok_or_else(|| CliError::Input("model_y is not set".into()))?,
    };
    let samples = model.sample_seeded(cfg.sample_count, cfg.seed)?;
    let meta = SampleMeta {
        software: Software::current(),
        seed: cfg.seed,
        sample_count: cfg.sample_count,
        dim: model.dim(),
        which,
        model: model.clone(),
    };
    Ok((samples, meta))
}

/// Gini of each row.
pub fn cmd_gini(rows: &[Vec<f64>], conv: GiniConvention) -> CliResult<Vec<f64>> {
    rows.iter()
        .map(|r| gini_order_stat(r, conv).map_err(CliError::from))
        .collect()
}

/// Gini of each draw of `model_x`.
pub fn cmd_gini_sampled(cfg: &ExperimentConfig) -> CliResult<Vec<f64>> {
    cfg.validate_basic()?;
    let s = cfg.model_x.sample_seeded(cfg.sample_count, cfg.seed)?;
    Ok(gini_rows(s.as_flat(), s.dim(), cfg.convention))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GiniSummary {
    pub count: usize,
    pub mean: f64,
    pub convention: GiniConvention,
    pub values: Vec<f64>,
}

pub fn gini_summary(values: Vec<f64>, convention: GiniConvention) -> GiniSummary {
    GiniSummary {
        count: values.len(),
        mean: values.iter().sum::<f64>() / values.len().max(1) as f64,
        convention,
        values,
    }
}

pub fn cmd_check(cfg: &ExperimentConfig) -> CliResult<ConditionReport> {
    cfg.validate_basic()?;
    let (x, y) = cfg.pair()?;
    if x.dim() != y.dim() {
        return Err(CliError::Input("model dimensions differ".into()));
    }
    let conditions = classify_dispersion(x.sigma(), y.sigma(), x.mu(), y.mu())?;
    let predictions = predict_orderings(&conditions, x.mu(), y.mu(), FamilyTraits::of(x));
    Ok(ConditionReport {
        conditions,
        predictions,
    })
}

/// Rate for an explicit `Σ`. Past the enumeration cap, `restarts` enables
/// the randomized lower bound instead of failing.
pub enum TailRateAnswer {
    Exact(TailRateOutput),
    Bound(RateBound),
}

pub fn cmd_tail_rate(
    sigma: &SymMatrix,
    restarts: Option<usize>,
    seed: u64,
) -> CliResult<TailRateAnswer> {
    let mu = vec![0.0; sigma.dim()];
    match ld_rate(sigma, &mu) {
        Ok(r) => Ok(TailRateAnswer::Exact(TailRateOutput::from(&r))),
        Err(CoreError::Capacity { .. }) if restarts.is_some() => Ok(TailRateAnswer::Bound(
            max_diag_search(sigma, restarts.unwrap(), seed)?,
        )),
        Err(e) => Err(e.into()),
    }
}

/// The normal-family rate for `model_x`.
pub fn tail_rate_for_model(model: &Model) -> CliResult<TailRateOutput> {
    match model {
        Model::Elliptical(d) => Ok(TailRateOutput::from(&gini_ellipse::tail::ld_rate_for(d)?)),
        Model::ScaleMixture(_) => Err(CliError::Hypothesis(
            "the large-deviation rate is only available for the normal family".into(),
        )),
    }
}

pub fn cmd_tail_identity(cfg: &ExperimentConfig) -> CliResult<IdentityReport> {
    cfg.validate_basic()?;
    Ok(tail_identity_check_model(
        &cfg.model_x,
        &cfg.thresholds,
        cfg.sample_count,
        cfg.seed,
    )?)
}

/// Runs every requested test. The returned record is fully determined by
/// the config.
pub fn cmd_run(cfg: &ExperimentConfig) -> CliResult<RunRecord> {
    cfg.validate()?;
    let mut warnings = Vec::new();
    let mut violated = false;

    let conditions = if cfg.wants(TestKind::Conditions) {
        Some(cmd_check(cfg)?)
    } else {
        None
    };

    let ordering = if cfg.wants(TestKind::St) || cfg.wants(TestKind::Icx) {
        let (x, y) = cfg.pair()?;
        let options = ExperimentOptions {
            convention: cfg.convention,
            grid_size: cfg.grid_size,
            z: cfg.z_threshold,
            coupled: cfg.coupled,
        };
        let mut rec = run_ordering_experiment(x, y, cfg.sample_count, cfg.seed, options)?;
        rec.tests.retain(|t| match t.relation {
            Relation::St => cfg.wants(TestKind::St),
            Relation::IcxOfNegation | Relation::MeanLeq => cfg.wants(TestKind::Icx),
        });
        if rec.tests.is_empty() {
            warnings.push("no ordering is predicted for this pair; nothing was tested".into());
        }
        for t in &rec.tests {
            match t.verdict {
                Verdict::Violated => violated = true,
                Verdict::Inapplicable | Verdict::Inconclusive => warnings.push(format!(
                    "{:?} test ({:?} dominant, {:?}) is {:?}{}",
                    t.relation,
                    t.dominant,
                    t.applies_to,
                    t.verdict,
                    t.note
                        .as_deref()
                        .map(|n| format!(": {n}"))
                        .unwrap_or_default()
                )),
                Verdict::Consistent => {}
            }
        }
        Some(rec)
    } else {
        None
    };

    let tail_rate = if cfg.wants(TestKind::TailRate) {
        match tail_rate_for_model(&cfg.model_x) {
            Ok(r) => Some(r),
            Err(CliError::Hypothesis(msg)) => {
                warnings.push(format!("tail_rate skipped: {msg}"));
                None
            }
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    let tail_identity = if cfg.wants(TestKind::TailIdentity) {
        let r = tail_identity_check_model(
            &cfg.model_x,
            &cfg.thresholds,
            cfg.sample_count,
            derive_seed(cfg.seed, 2),
        )?;
        if !r.pathwise_ok {
            violated = true;
        }
        Some(r)
    } else {
        None
    };

    Ok(RunRecord {
        software: Software::current(),
        config: cfg.clone(),
        conditions,
        ordering,
        tail_rate,
        tail_identity,
        warnings,
        status: if violated {
            RunStatus::Violated
        } else {
            RunStatus::Consistent
        },
    })
}
