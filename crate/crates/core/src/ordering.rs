//! Which stochastic orderings of the Gini index follow from the dispersion
//! matrices, and Monte Carlo checks of those orderings.
//!
//! [`classify_dispersion`] evaluates every structural condition in both
//! directions, [`predict_orderings`] turns the true ones into
//! [`OrderPrediction`]s, and [`run_ordering_experiment`] samples both models
//! and tests each prediction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elliptical::{sample_coupled, Model, SampleMatrix};
use crate::error::{Error, Result};
use crate::gini::{gini_rows, GiniConvention};
use crate::matrix::{
    centered_loewner_leq, epsilon_feasible, is_constant_vector, loewner_leq, EpsilonFeasibility,
    PsdVerdict, SymMatrix, DEFAULT_TOL,
};
use crate::stream::derive_seed;

/// Entrywise tolerance for the structural pattern detectors.
pub const PATTERN_TOL: f64 = 1e-9;
pub const DEFAULT_GRID_SIZE: usize = 200;
pub const DEFAULT_Z: f64 = 4.0;

/// Outcome of matching `Σy − Σx` against `ε·P` for a fixed pattern `P`.
/// `epsilon` is signed: negative means the shift runs from `Σy` to `Σx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternMatch {
    pub matched: bool,
    pub epsilon: f64,
    pub max_deviation: f64,
}

/// The Loewner-type conditions for one direction `Σa ⪯ Σb`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalConditions {
    pub loewner: PsdVerdict,
    pub centered: PsdVerdict,
    pub eps_feasible: EpsilonFeasibility,
}

impl DirectionalConditions {
    fn evaluate(sa: &SymMatrix, sb: &SymMatrix) -> Result<Self> {
        Ok(DirectionalConditions {
            loewner: loewner_leq(sa, sb, DEFAULT_TOL)?,
            centered: centered_loewner_leq(sa, sb, DEFAULT_TOL)?,
            eps_feasible: epsilon_feasible(sa, sb, DEFAULT_TOL)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionConditionSet {
    pub n: usize,
    /// `Σx ⪯ Σy` and its weaker relatives.
    pub forward: DirectionalConditions,
    /// `Σy ⪯ Σx` and its weaker relatives.
    pub reverse: DirectionalConditions,
    /// `Σy − Σx` is `ε` on the first row and column off the diagonal, zero
    /// elsewhere.
    pub first_row_shift: PatternMatch,
    /// `Σy − Σx = ε(𝟙𝟙′ − I)`.
    pub uniform_offdiag_shift: PatternMatch,
    /// Equal diagonals and equal locations.
    pub same_marginals: bool,
    /// `σˣᵢⱼ ≤ σʸᵢⱼ` for all `i < j`.
    pub componentwise_offdiag_leq: bool,
    /// `σˣᵢⱼ ≥ σʸᵢⱼ` for all `i < j`.
    pub componentwise_offdiag_geq: bool,
    pub same_location: bool,
}

fn match_pattern(d: &SymMatrix, pattern: impl Fn(usize, usize) -> bool) -> PatternMatch {
    let n = d.dim();
    let cells: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| pattern(i, j))
        .collect();
    if cells.is_empty() {
        return PatternMatch {
            matched: false,
            epsilon: 0.0,
            max_deviation: f64::INFINITY,
        };
    }
    let epsilon = cells.iter().map(|&(i, j)| d.get(i, j)).sum::<f64>() / cells.len() as f64;
    let mut max_deviation = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let expected = if i != j && pattern(i.min(j), i.max(j)) {
                epsilon
            } else {
                0.0
            };
            max_deviation = max_deviation.max((d.get(i, j) - expected).abs());
        }
    }
    PatternMatch {
        matched: max_deviation <= PATTERN_TOL && epsilon.abs() > PATTERN_TOL,
        epsilon,
        max_deviation,
    }
}

fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= PATTERN_TOL
}

/// Evaluates every dispersion condition the ordering results depend on.
pub fn classify_dispersion(
    sx: &SymMatrix,
    sy: &SymMatrix,
    mu_x: &[f64],
    mu_y: &[f64],
) -> Result<DispersionConditionSet> {
    let n = sx.dim();
    for found in [sy.dim(), mu_x.len(), mu_y.len()] {
        if found != n {
            return Err(Error::DimensionMismatch { expected: n, found });
        }
    }
    let d = sy.sub(sx)?;
    let same_location = mu_x.iter().zip(mu_y).all(|(a, b)| approx_eq(*a, *b));
    let same_diagonal = (0..n).all(|i| approx_eq(sx.get(i, i), sy.get(i, i)));
    let offdiag = || (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
    Ok(DispersionConditionSet {
        n,
        forward: DirectionalConditions::evaluate(sx, sy)?,
        reverse: DirectionalConditions::evaluate(sy, sx)?,
        first_row_shift: match_pattern(&d, |i, _| i == 0),
        uniform_offdiag_shift: match_pattern(&d, |_, _| true),
        same_marginals: same_diagonal && same_location,
        componentwise_offdiag_leq: offdiag().all(|(i, j)| d.get(i, j) >= -PATTERN_TOL),
        componentwise_offdiag_geq: offdiag().all(|(i, j)| d.get(i, j) <= PATTERN_TOL),
        same_location,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `G(a) ≤_st G(b)` with `b` the dominant model.
    St,
    /// `−G(a) ≤_icx −G(b)` with `b` the dominant model.
    IcxOfNegation,
    /// `E G(a) ≤ E G(b)` with `b` the dominant model.
    MeanLeq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    X,
    Y,
}

impl Side {
    fn other(self) -> Side {
        match self {
            Side::X => Side::Y,
            Side::Y => Side::X,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppliesTo {
    /// `G(X − μx)` against `G(Y − μy)`.
    GiniOfCentered,
    GiniRaw,
}

/// The condition that licenses a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionSource {
    Loewner,
    CenteredLoewner,
    EpsilonShift,
    FirstRowShift,
    UniformOffdiagShift,
    EqualMarginalsIcx,
    EqualMarginalsMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrderPrediction {
    pub relation: Relation,
    pub dominant: Side,
    pub applies_to: AppliesTo,
    pub source: PredictionSource,
    /// The raw-index conclusion only follows when each location is zero or
    /// a constant vector, and that does not hold here.
    pub location_caveat: bool,
}

/// Properties of the common generator that gate some predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyTraits {
    pub normal_mixture: bool,
    pub finite_mean: bool,
}

impl FamilyTraits {
    pub fn of(model: &Model) -> Self {
        FamilyTraits {
            normal_mixture: model.is_normal_mixture(),
            finite_mean: model.has_finite_mean(),
        }
    }
}

/// Every ordering licensed by the true conditions, in both directions.
pub fn predict_orderings(
    conds: &DispersionConditionSet,
    mu_x: &[f64],
    mu_y: &[f64],
    traits: FamilyTraits,
) -> Vec<OrderPrediction> {
    let raw_caveat = !(is_constant_vector(mu_x) && is_constant_vector(mu_y));
    let mut out = Vec::new();
    let mut st = |dominant: Side, source: PredictionSource| {
        for applies_to in [AppliesTo::GiniOfCentered, AppliesTo::GiniRaw] {
            out.push(OrderPrediction {
                relation: Relation::St,
                dominant,
                applies_to,
                source,
                location_caveat: applies_to == AppliesTo::GiniRaw && raw_caveat,
            });
        }
    };
    for (dir, dominant) in [(&conds.forward, Side::Y), (&conds.reverse, Side::X)] {
        if dir.loewner.is_psd {
            st(dominant, PredictionSource::Loewner);
        }
        if dir.centered.is_psd {
            st(dominant, PredictionSource::CenteredLoewner);
        }
        if dir.eps_feasible.feasible {
            st(dominant, PredictionSource::EpsilonShift);
        }
    }
    // raising covariances by ε > 0 in these patterns shrinks the index
    for (pattern, source) in [
        (conds.first_row_shift, PredictionSource::FirstRowShift),
        (
            conds.uniform_offdiag_shift,
            PredictionSource::UniformOffdiagShift,
        ),
    ] {
        if pattern.matched {
            st(
                if pattern.epsilon > 0.0 {
                    Side::X
                } else {
                    Side::Y
                },
                source,
            );
        }
    }
    if conds.same_marginals && traits.normal_mixture {
        for (holds, dominant) in [
            (conds.componentwise_offdiag_leq, Side::Y),
            (conds.componentwise_offdiag_geq, Side::X),
        ] {
            if !holds {
                continue;
            }
            out.push(OrderPrediction {
                relation: Relation::IcxOfNegation,
                dominant,
                applies_to: AppliesTo::GiniRaw,
                source: PredictionSource::EqualMarginalsIcx,
                location_caveat: false,
            });
            out.push(OrderPrediction {
                relation: Relation::MeanLeq,
                dominant: dominant.other(),
                applies_to: AppliesTo::GiniRaw,
                source: PredictionSource::EqualMarginalsMean,
                location_caveat: false,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Violated,
    Inconclusive,
    Inapplicable,
}

/// Pointwise comparison of two curves on a shared grid. `curve_a` is
/// predicted to lie below `curve_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderTestReport {
    pub grid: Vec<f64>,
    pub curve_a: Vec<f64>,
    pub curve_b: Vec<f64>,
    pub mc_sigma: Vec<f64>,
    /// `max_t (curve_a − curve_b)`; non-positive when dominance holds
    /// everywhere on the grid.
    pub max_violation: f64,
    /// `max_t (curve_a − curve_b)/σ_t` over points with `σ_t > 0`.
    pub max_z: f64,
    pub z_threshold: f64,
    pub verdict: Verdict,
    pub sample_count: usize,
    pub seed: Option<u64>,
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn pooled_grid(a: &[f64], b: &[f64], grid_size: usize) -> Option<Vec<f64>> {
    let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    pooled.par_sort_unstable_by(f64::total_cmp);
    let lo = quantile_sorted(&pooled, 0.005);
    let hi = quantile_sorted(&pooled, 0.995);
    if hi.is_nan() || lo.is_nan() || hi <= lo {
        return None;
    }
    let step = (hi - lo) / (grid_size - 1) as f64;
    Some((0..grid_size).map(|k| lo + k as f64 * step).collect())
}

fn check_samples(a: &[f64], b: &[f64], grid_size: usize, z: f64) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("both samples must be nonempty"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::invalid("samples contain NaN"));
    }
    if grid_size < 2 {
        return Err(Error::invalid("grid_size must be at least 2"));
    }
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::invalid("z threshold must be positive"));
    }
    Ok(())
}

fn finish_report(
    grid: Vec<f64>,
    curve_a: Vec<f64>,
    curve_b: Vec<f64>,
    mc_sigma: Vec<f64>,
    z: f64,
    sample_count: usize,
) -> OrderTestReport {
    let mut max_violation = f64::NEG_INFINITY;
    let mut max_z = f64::NEG_INFINITY;
    let mut violated = false;
    for k in 0..grid.len() {
        let gap = curve_a[k] - curve_b[k];
        max_violation = max_violation.max(gap);
        if mc_sigma[k] > 0.0 {
            max_z = max_z.max(gap / mc_sigma[k]);
        }
        if gap > z * mc_sigma[k] {
            violated = true;
        }
    }
    OrderTestReport {
        grid,
        curve_a,
        curve_b,
        mc_sigma,
        max_violation,
        max_z,
        z_threshold: z,
        verdict: if violated {
            Verdict::Violated
        } else {
            Verdict::Consistent
        },
        sample_count,
        seed: None,
    }
}

fn inconclusive(z: f64, sample_count: usize) -> OrderTestReport {
    OrderTestReport {
        grid: Vec::new(),
        curve_a: Vec::new(),
        curve_b: Vec::new(),
        mc_sigma: Vec::new(),
        max_violation: 0.0,
        max_z: 0.0,
        z_threshold: z,
        verdict: Verdict::Inconclusive,
        sample_count,
        seed: None,
    }
}

/// Tests `a ≤_st b` by comparing empirical survival functions on a grid
/// spanning the pooled 0.5%–99.5% quantiles.
///
/// The standard error treats the two samples as independent, which
/// overstates it for coupled samples.
pub fn empirical_st_test(
    a: &[f64],
    b: &[f64],
    grid_size: usize,
    z: f64,
) -> Result<OrderTestReport> {
    check_samples(a, b, grid_size, z)?;
    let count = a.len().min(b.len());
    let Some(grid) = pooled_grid(a, b, grid_size) else {
        return Ok(inconclusive(z, count));
    };
    let survival = |xs: &[f64]| -> Vec<f64> {
        let mut s = xs.to_vec();
        s.par_sort_unstable_by(f64::total_cmp);
        let n = s.len() as f64;
        grid.iter()
            .map(|&t| (s.len() - s.partition_point(|&v| v <= t)) as f64 / n)
            .collect()
    };
    let sa = survival(a);
    let sb = survival(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let sigma = sa
        .iter()
        .zip(&sb)
        .map(|(&p, &q)| (p * (1.0 - p) / na + q * (1.0 - q) / nb).sqrt())
        .collect();
    Ok(finish_report(grid, sa, sb, sigma, z, count))
}

/// Tests `a ≤_icx b` through the stop-loss transforms `E(a − t)₊` and
/// `E(b − t)₊`, with the same grid and decision rule as
/// [`empirical_st_test`].
pub fn empirical_icx_test(
    a: &[f64],
    b: &[f64],
    grid_size: usize,
    z: f64,
) -> Result<OrderTestReport> {
    check_samples(a, b, grid_size, z)?;
    let count = a.len().min(b.len());
    let Some(grid) = pooled_grid(a, b, grid_size) else {
        return Ok(inconclusive(z, count));
    };
    let stop_loss = |xs: &[f64]| -> Vec<(f64, f64)> {
        let n = xs.len() as f64;
        grid.par_iter()
            .map(|&t| {
                let (s, s2) = xs.iter().fold((0.0, 0.0), |(s, s2), &v| {
                    let e = (v - t).max(0.0);
                    (s + e, s2 + e * e)
                });
                let mean = s / n;
                (mean, (s2 / n - mean * mean).max(0.0) / n)
            })
            .collect()
    };
    let la = stop_loss(a);
    let lb = stop_loss(b);
    let sigma = la
        .iter()
        .zip(&lb)
        .map(|(p, q)| (p.1 + q.1).sqrt())
        .collect();
    Ok(finish_report(
        grid,
        la.iter().map(|p| p.0).collect(),
        lb.iter().map(|p| p.0).collect(),
        sigma,
        z,
        count,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanTestReport {
    pub mean_a: f64,
    pub mean_b: f64,
    /// `mean_b − mean_a`; positive when the prediction holds.
    pub margin: f64,
    pub sigma: f64,
    pub paired: bool,
    pub z_threshold: f64,
    pub verdict: Verdict,
    pub sample_count: usize,
}

/// Tests `E a ≤ E b`. With `paired`, the samples are coupled draw by draw
/// and the standard error is that of the paired differences.
pub fn empirical_mean_test(a: &[f64], b: &[f64], paired: bool, z: f64) -> Result<MeanTestReport> {
    check_samples(a, b, 2, z)?;
    if paired && a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let (mean_a, var_a) = crate::stats::mean_var(a);
    let (mean_b, var_b) = crate::stats::mean_var(b);
    let sigma = if paired {
        let d: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
        (crate::stats::mean_var(&d).1 / d.len() as f64).sqrt()
    } else {
        (var_a / a.len() as f64 + var_b / b.len() as f64).sqrt()
    };
    let margin = mean_b - mean_a;
    Ok(MeanTestReport {
        mean_a,
        mean_b,
        margin,
        sigma,
        paired,
        z_threshold: z,
        verdict: if -margin > z * sigma {
            Verdict::Violated
        } else {
            Verdict::Consistent
        },
        sample_count: a.len().min(b.len()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    pub convention: GiniConvention,
    pub grid_size: usize,
    pub z: f64,
    /// Share the radial, spherical and mixing draws between the two models.
    pub coupled: bool,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions {
            convention: GiniConvention::default(),
            grid_size: DEFAULT_GRID_SIZE,
            z: DEFAULT_Z,
            coupled: true,
        }
    }
}

/// One statistical test, shared by every prediction with the same relation,
/// direction and target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionTest {
    pub relation: Relation,
    pub dominant: Side,
    pub applies_to: AppliesTo,
    pub sources: Vec<PredictionSource>,
    pub verdict: Verdict,
    pub curves: Option<OrderTestReport>,
    pub mean: Option<MeanTestReport>,
    pub note: Option<String>,
}

impl PredictionTest {
    /// `(t, survival of G(X), survival of G(Y), σ)` rows for st tests.
    pub fn survival_rows(&self) -> Option<Vec<[f64; 4]>> {
        let c = self
            .curves
            .as_ref()
            .filter(|_| self.relation == Relation::St)?;
        let (x, y) = match self.dominant {
            Side::Y => (&c.curve_a, &c.curve_b),
            Side::X => (&c.curve_b, &c.curve_a),
        };
        Some(
            (0..c.grid.len())
                .map(|k| [c.grid[k], x[k], y[k], c.mc_sigma[k]])
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GiniSummary {
    pub mean_raw: f64,
    pub mean_centered: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub sample_count: usize,
    pub seed: u64,
    pub options: ExperimentOptions,
    pub conditions: DispersionConditionSet,
    pub predictions: Vec<OrderPrediction>,
    pub tests: Vec<PredictionTest>,
    pub gini_x: GiniSummary,
    pub gini_y: GiniSummary,
}

impl ExperimentRecord {
    pub fn any_violated(&self) -> bool {
        self.tests.iter().any(|t| t.verdict == Verdict::Violated)
    }
}

/// Gini of each row, raw and after subtracting `mu`.
pub fn gini_of_samples(
    samples: &SampleMatrix,
    mu: &[f64],
    conv: GiniConvention,
) -> (Vec<f64>, Vec<f64>) {
    let dim = samples.dim();
    let raw = gini_rows(samples.as_flat(), dim, conv);
    let centered_data: Vec<f64> = samples
        .as_flat()
        .chunks_exact(dim)
        .flat_map(|row| row.iter().zip(mu).map(|(v, m)| v - m))
        .collect();
    let centered = gini_rows(&centered_data, dim, conv);
    (raw, centered)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Classifies the pair, predicts orderings, samples both models and tests
/// every prediction.
pub fn run_ordering_experiment(
    model_x: &Model,
    model_y: &Model,
    sample_count: usize,
    seed: u64,
    options: ExperimentOptions,
) -> Result<ExperimentRecord> {
    if !model_x.same_family(model_y) {
        return Err(Error::HypothesisViolation(
            "the two models must share dimension, radial law and mixing law".into(),
        ));
    }
    if sample_count < 2 {
        return Err(Error::invalid("sample_count must be at least 2"));
    }
    let conditions =
        classify_dispersion(model_x.sigma(), model_y.sigma(), model_x.mu(), model_y.mu())?;
    let traits = FamilyTraits::of(model_x);
    let predictions = predict_orderings(&conditions, model_x.mu(), model_y.mu(), traits);

    let (sx, sy) = if options.coupled {
        sample_coupled(model_x, model_y, sample_count, seed)?
    } else {
        (
            model_x.sample_seeded(sample_count, derive_seed(seed, 0))?,
            model_y.sample_seeded(sample_count, derive_seed(seed, 1))?,
        )
    };
    let (gx_raw, gx_centered) = gini_of_samples(&sx, model_x.mu(), options.convention);
    let (gy_raw, gy_centered) = gini_of_samples(&sy, model_y.mu(), options.convention);

    let mut tests: Vec<PredictionTest> = Vec::new();
    for p in &predictions {
        if let Some(t) = tests.iter_mut().find(|t| {
            t.relation == p.relation && t.dominant == p.dominant && t.applies_to == p.applies_to
        }) {
            if !t.sources.contains(&p.source) {
                t.sources.push(p.source);
            }
            continue;
        }
        let (gx, gy) = match p.applies_to {
            AppliesTo::GiniRaw => (&gx_raw, &gy_raw),
            AppliesTo::GiniOfCentered => (&gx_centered, &gy_centered),
        };
        // `a` is the dominated side, `b` the dominant one
        let (a, b) = match p.dominant {
            Side::Y => (gx, gy),
            Side::X => (gy, gx),
        };
        let mut test = PredictionTest {
            relation: p.relation,
            dominant: p.dominant,
            applies_to: p.applies_to,
            sources: vec![p.source],
            verdict: Verdict::Inapplicable,
            curves: None,
            mean: None,
            note: None,
        };
        match p.relation {
            Relation::St => {
                let mut r = empirical_st_test(a, b, options.grid_size, options.z)?;
                r.seed = Some(seed);
                test.verdict = r.verdict;
                test.curves = Some(r);
            }
            Relation::IcxOfNegation | Relation::MeanLeq if !traits.finite_mean => {
                test.note = Some("expectations do not exist for this family".into());
            }
            Relation::IcxOfNegation => {
                let na: Vec<f64> = a.iter().map(|v| -v).collect();
                let nb: Vec<f64> = b.iter().map(|v| -v).collect();
                let mut r = empirical_icx_test(&na, &nb, options.grid_size, options.z)?;
                r.seed = Some(seed);
                test.verdict = r.verdict;
                test.curves = Some(r);
            }
            Relation::MeanLeq => {
                let r = empirical_mean_test(a, b, options.coupled, options.z)?;
                test.verdict = r.verdict;
                test.mean = Some(r);
            }
        }
        if p.location_caveat {
            test.note =
                Some("raw-index conclusion needs each location to be zero or constant".into());
        }
        tests.push(test);
    }

    Ok(ExperimentRecord {
        sample_count,
        seed,
        options,
        conditions,
        predictions,
        tests,
        gini_x: GiniSummary {
            mean_raw: mean(&gx_raw),
            mean_centered: mean(&gx_centered),
        },
        gini_y: GiniSummary {
            mean_raw: mean(&gy_raw),
            mean_centered: mean(&gy_centered),
        },
    })
}
