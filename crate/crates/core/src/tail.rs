//! Large-deviation rate of the Gini index for normal vectors.
//!
//! The unnormalized index is the largest of the `n!` linear forms `C_r′x`,
//! where `C_r` runs over permutations of the coefficient vector. For
//! `X ~ N(μ, Σ)` each form is normal with variance `C_r′ΣC_r`, and
//!
//! ```text
//! log P(G_n(X) > x) / x²  →  −1 / (2 · max_r C_r′ΣC_r)
//! ```

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elliptical::{EllipticalDist, Model, RadialLaw};
use crate::error::{Error, Result};
use crate::gini::{
    gini_order_stat, lex_permutations, CoeffVector, GiniConvention, DEFAULT_ENUMERATION_CAP,
};
use crate::matrix::{is_psd, SymMatrix, DEFAULT_TOL};
use crate::stream;

/// Above this many entries the full `m × m` covariance is not materialized.
pub const FULL_COVARIANCE_ENTRY_LIMIT: usize = 1 << 24;

/// All permutations of the coefficient vector, one per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermMatrix {
    n: usize,
    rows: Vec<i64>,
}

impl PermMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.rows.len() / self.n
    }

    pub fn row(&self, r: usize) -> &[i64] {
        &self.rows[r * self.n..(r + 1) * self.n]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[i64]> + '_ {
        self.rows.chunks_exact(self.n)
    }

    /// `C_r′x`.
    pub fn dot(&self, r: usize, x: &[f64]) -> f64 {
        self.row(r).iter().zip(x).map(|(&c, v)| c as f64 * v).sum()
    }

    /// `max_r C_r′x`.
    pub fn max_form(&self, x: &[f64]) -> f64 {
        (0..self.m())
            .map(|r| self.dot(r, x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `C_r′ΣC_r`.
    pub fn quadratic_form(&self, r: usize, sigma: &SymMatrix) -> f64 {
        let c = self.row(r);
        let mut acc = 0.0;
        for (i, &ci) in c.iter().enumerate() {
            let inner: f64 = c
                .iter()
                .enumerate()
                .map(|(j, &cj)| sigma.get(i, j) * cj as f64)
                .sum();
            acc += ci as f64 * inner;
        }
        acc
    }
}

pub fn permutation_matrix(n: usize) -> Result<PermMatrix> {
    permutation_matrix_capped(n, DEFAULT_ENUMERATION_CAP)
}

pub fn permutation_matrix_capped(n: usize, cap: usize) -> Result<PermMatrix> {
    if n == 0 {
        return Err(Error::invalid("permutation matrix needs n >= 1"));
    }
    if n == 1 {
        return Err(Error::Degenerate(
            "n = 1: the coefficient vector is (0) and the index is identically zero".into(),
        ));
    }
    if n > cap {
        return Err(Error::Capacity { n, cap });
    }
    let c = CoeffVector::new(n)?;
    let c = c.as_slice();
    let mut rows = Vec::with_capacity(n * (1..=n).product::<usize>());
    for p in lex_permutations(n) {
        rows.extend(p.iter().map(|&k| c[k]));
    }
    Ok(PermMatrix { n, rows })
}

/// `CΣC′`, or only its diagonal when the full matrix would be too large.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedCovariance {
    pub diagonal: Vec<f64>,
    pub full: Option<SymMatrix>,
    pub diagonal_only: bool,
}

pub fn transformed_covariance(
    sigma: &SymMatrix,
    perms: &PermMatrix,
) -> Result<TransformedCovariance> {
    transformed_covariance_limited(sigma, perms, FULL_COVARIANCE_ENTRY_LIMIT)
}

pub fn transformed_covariance_limited(
    sigma: &SymMatrix,
    perms: &PermMatrix,
    entry_limit: usize,
) -> Result<TransformedCovariance> {
    check_dim(sigma, perms)?;
    let m = perms.m();
    let diagonal = diag_forms(sigma, perms);
    if m.saturating_mul(m) > entry_limit {
        return Ok(TransformedCovariance {
            diagonal,
            full: None,
            diagonal_only: true,
        });
    }
    let c = nalgebra::DMatrix::from_fn(m, perms.n(), |r, j| perms.row(r)[j] as f64);
    let full = sigma.congruence(&c)?;
    Ok(TransformedCovariance {
        diagonal,
        full: Some(full),
        diagonal_only: false,
    })
}

fn check_dim(sigma: &SymMatrix, perms: &PermMatrix) -> Result<()> {
    if sigma.dim() != perms.n() {
        return Err(Error::DimensionMismatch {
            expected: perms.n(),
            found: sigma.dim(),
        });
    }
    Ok(())
}

fn diag_forms(sigma: &SymMatrix, perms: &PermMatrix) -> Vec<f64> {
    (0..perms.m())
        .into_par_iter()
        .with_min_len(256)
        .map(|r| perms.quadratic_form(r, sigma))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRateResult {
    pub n: usize,
    pub m: usize,
    pub mu: Vec<f64>,
    pub diag: Vec<f64>,
    pub max_diag: f64,
    pub rate: f64,
    pub argmax_rows: Vec<usize>,
}

/// Exact rate by enumerating every coefficient permutation.
///
/// Ties are common (`Σ = I` ties every row) and all maximizing rows are
/// reported. `μ` does not enter the rate.
pub fn ld_rate(sigma: &SymMatrix, mu: &[f64]) -> Result<TailRateResult> {
    let n = sigma.dim();
    if mu.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: mu.len(),
        });
    }
    if mu.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("location vector has non-finite entries"));
    }
    let verdict = is_psd(sigma, DEFAULT_TOL)?;
    if !verdict.is_psd {
        return Err(Error::NotPsd {
            min_eigenvalue: verdict.min_eigenvalue,
            threshold: verdict.threshold,
        });
    }
    let perms = permutation_matrix(n)?;
    let diag = diag_forms(sigma, &perms);
    let max_diag = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let coeff_norm_sq: f64 = perms.row(0).iter().map(|&c| (c * c) as f64).sum();
    if max_diag <= 1e-12 * coeff_norm_sq * sigma.spectral_radius() || max_diag <= 0.0 {
        return Err(Error::Degenerate(
            "every permuted quadratic form vanishes; the index is almost surely constant".into(),
        ));
    }
    let tie = max_diag * (1.0 - 1e-12);
    let argmax_rows = diag
        .iter()
        .enumerate()
        .filter(|(_, &d)| d >= tie)
        .map(|(r, _)| r)
        .collect();
    Ok(TailRateResult {
        n,
        m: perms.m(),
        mu: mu.to_vec(),
        diag,
        max_diag,
        rate: -1.0 / (2.0 * max_diag),
        argmax_rows,
    })
}

/// [`ld_rate`] for a distribution object; only the normal family is accepted.
pub fn ld_rate_for(dist: &EllipticalDist) -> Result<TailRateResult> {
    if !matches!(dist.radial(), RadialLaw::Normal) {
        return Err(Error::Inapplicable(
            "the large-deviation rate is only available for the normal family".into(),
        ));
    }
    ld_rate(dist.sigma(), dist.mu())
}

/// Result of a randomized search over permutations. `max_diag_lower` is a
/// lower bound on the true maximum, so `rate_bound` is at least as negative
/// as the true rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateBound {
    pub n: usize,
    pub restarts: usize,
    pub seed: u64,
    pub best_row: Vec<i64>,
    pub max_diag_lower: f64,
    pub rate_bound: f64,
}

/// Random restarts followed by pairwise-swap hill climbing, for `n` past the
/// enumeration cap.
pub fn max_diag_search(sigma: &SymMatrix, restarts: usize, seed: u64) -> Result<RateBound> {
    let n = sigma.dim();
    if n < 2 {
        return Err(Error::Degenerate(
            "n = 1: the index is identically zero".into(),
        ));
    }
    if restarts == 0 {
        return Err(Error::invalid("at least one restart is required"));
    }
    let base = CoeffVector::new(n)?.to_f64();
    let form = |c: &[f64]| -> f64 {
        (0..n)
            .map(|i| c[i] * (0..n).map(|j| sigma.get(i, j) * c[j]).sum::<f64>())
            .sum()
    };
    let (best_value, best_row) = (0..restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream::stream(seed, k as u64);
            let mut c = base.clone();
            c.shuffle(&mut rng);
            let mut value = form(&c);
            loop {
                let mut improved = false;
                for i in 0..n {
                    for j in i + 1..n {
                        c.swap(i, j);
                        let v = form(&c);
                        if v > value * (1.0 + 1e-14) + 1e-300 {
                            value = v;
                            improved = true;
                        } else {
                            c.swap(i, j);
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
            (value, c)
        })
        .reduce_with(|a, b| if b.0 > a.0 { b } else { a })
        .unwrap();
    if best_value <= 0.0 {
        return Err(Error::Degenerate(
            "no permuted quadratic form is positive".into(),
        ));
    }
    Ok(RateBound {
        n,
        restarts,
        seed,
        best_row: best_row.iter().map(|&v| v as i64).collect(),
        max_diag_lower: best_value,
        rate_bound: -1.0 / (2.0 * best_value),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub t: f64,
    pub p_direct: f64,
    pub p_union: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub n: usize,
    pub m: usize,
    pub sample_count: usize,
    pub seed: u64,
    /// Largest `|G − max_r C_r′x| / max(|G|, ‖x‖∞)` over all paths.
    pub max_pathwise_error: f64,
    pub pathwise_ok: bool,
    pub rows: Vec<ThresholdRow>,
}

pub const PATHWISE_TOL: f64 = 1e-10;

/// Compares the order-statistic index with the maximum over permuted linear
/// forms on every sampled path, then tabulates both tail frequencies.
pub fn tail_identity_check(
    dist: &EllipticalDist,
    thresholds: &[f64],
    sample_count: usize,
    seed: u64,
) -> Result<IdentityReport> {
    tail_identity_check_model(
        &Model::Elliptical(dist.clone()),
        thresholds,
        sample_count,
        seed,
    )
}

/// [`tail_identity_check`] for either model kind; the identity is pathwise
/// and holds for every law.
pub fn tail_identity_check_model(
    model: &Model,
    thresholds: &[f64],
    sample_count: usize,
    seed: u64,
) -> Result<IdentityReport> {
    if sample_count == 0 {
        return Err(Error::invalid("sample_count must be positive"));
    }
    if thresholds.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("thresholds must be finite"));
    }
    let n = model.dim();
    let perms = permutation_matrix(n)?;
    let samples = model.sample_seeded(sample_count, seed)?;
    let pairs: Vec<(f64, f64, f64)> = samples
        .as_flat()
        .par_chunks_exact(n)
        .map(|x| {
            let g = gini_order_stat(x, GiniConvention::UNNORMALIZED).unwrap();
            let u = perms.max_form(x);
            let scale = x.iter().fold(g.abs(), |a, v| a.max(v.abs()));
            let err = if scale == 0.0 {
                (g - u).abs()
            } else {
                (g - u).abs() / scale
            };
            (g, u, err)
        })
        .collect();
    let max_pathwise_error = pairs.iter().map(|p| p.2).fold(0.0, f64::max);
    let count = sample_count as f64;
    let rows = thresholds
        .iter()
        .map(|&t| {
            let direct = pairs.iter().filter(|p| p.0 > t).count() as f64 / count;
            let union = pairs.iter().filter(|p| p.1 > t).count() as f64 / count;
            ThresholdRow {
                t,
                p_direct: direct,
                p_union: union,
                sigma: (direct * (1.0 - direct) / count).sqrt(),
            }
        })
        .collect();
    Ok(IdentityReport {
        n,
        m: perms.m(),
        sample_count,
        seed,
        max_pathwise_error,
        pathwise_ok: max_pathwise_error <= PATHWISE_TOL,
        rows,
    })
}

/// One level of the inclusion-exclusion expansion: the sum over all `k`-sets
/// of rows of `P(every Y_j in the set exceeds x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelTerm {
    pub k: usize,
    pub value: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionExclusionReport {
    pub n: usize,
    pub m: usize,
    pub x: f64,
    pub depth: usize,
    pub sample_count: usize,
    pub seed: u64,
    pub direct: f64,
    pub direct_sigma: f64,
    pub terms: Vec<LevelTerm>,
    /// `partial_sums[d − 1] = Σ_{k ≤ d} (−1)^{k+1} terms[k − 1]`.
    pub partial_sums: Vec<f64>,
}

fn binomial(j: usize, k: usize) -> f64 {
    if k > j {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (j - i) as f64 / (i + 1) as f64)
}

/// Monte Carlo inclusion-exclusion terms for `P(max_r Y_r > x)`, `n ∈ {2, 3}`.
///
/// A path with `j` exceeding rows contributes `C(j, k)` to level `k`, so
/// every term and the direct estimate come from the same paths.
pub fn inclusion_exclusion_tail(
    dist: &EllipticalDist,
    x: f64,
    depth: usize,
    sample_count: usize,
    seed: u64,
) -> Result<InclusionExclusionReport> {
    let n = dist.dim();
    if !(2..=3).contains(&n) {
        return Err(Error::Capacity { n, cap: 3 });
    }
    if !x.is_finite() {
        return Err(Error::invalid("threshold must be finite"));
    }
    if sample_count == 0 {
        return Err(Error::invalid("sample_count must be positive"));
    }
    let perms = permutation_matrix(n)?;
    let m = perms.m();
    if depth == 0 || depth > m {
        return Err(Error::invalid(format!(
            "depth must lie in 1..={m}, got {depth}"
        )));
    }
    let samples = Model::Elliptical(dist.clone()).sample_seeded(sample_count, seed)?;
    let exceed: Vec<usize> = samples
        .as_flat()
        .par_chunks_exact(n)
        .map(|v| (0..m).filter(|&r| perms.dot(r, v) > x).count())
        .collect();
    let count = sample_count as f64;
    let mean_sd = |f: &dyn Fn(usize) -> f64| {
        let (s, s2) = exceed.iter().fold((0.0, 0.0), |(s, s2), &j| {
            let v = f(j);
            (s + v, s2 + v * v)
        });
        let mean = s / count;
        let var = (s2 / count - mean * mean).max(0.0);
        (mean, (var / count).sqrt())
    };
    let (direct, direct_sigma) = mean_sd(&|j| if j > 0 { 1.0 } else { 0.0 });
    let terms: Vec<LevelTerm> = (1..=depth)
        .map(|k| {
            let (value, sigma) = mean_sd(&|j| binomial(j, k));
            LevelTerm { k, value, sigma }
        })
        .collect();
    let partial_sums = terms
        .iter()
        .scan(0.0, |acc, t| {
            *acc += if t.k % 2 == 1 { t.value } else { -t.value };
            Some(*acc)
        })
        .collect();
    Ok(InclusionExclusionReport {
        n,
        m,
        x,
        depth,
        sample_count,
        seed,
        direct,
        direct_sigma,
        terms,
        partial_sums,
    })
}

/// `ln Φ̄(z)` without underflow.
pub fn log_normal_survival(z: f64) -> f64 {
    if z < 8.0 {
        return (0.5 * libm::erfc(z / std::f64::consts::SQRT_2)).ln();
    }
    // Φ̄(z) = φ(z)·M(z), with the Mills ratio M from its continued fraction
    // M(z) = 1/(z + 1/(z + 2/(z + 3/(z + …)))), evaluated by modified Lentz
    let tiny = 1e-300;
    let mut f = z;
    let mut c = z;
    let mut d = 0.0;
    for k in 1..200 {
        let a = k as f64;
        d = z + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = z + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    -0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln() - f.ln()
}

/// `log Φ̄(x/σ) / x²`, which tends to `−1/(2σ²)`.
pub fn gaussian_tail_log_ratio(variance: f64, x: f64) -> Result<f64> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::invalid(format!(
            "variance must be positive, got {variance}"
        )));
    }
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::invalid(format!("x must be positive, got {x}")));
    }
    Ok(log_normal_survival(x / variance.sqrt()) / (x * x))
}

/// Least-squares fit of `(ratio(x) − limit)·x²` against `ln x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceFit {
    pub xs: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
}

/// The error behaves like `−(ln x + const)/x²`, so the slope is close to −1.
pub fn convergence_fit(variance: f64, xs: &[f64]) -> Result<ConvergenceFit> {
    if xs.len() < 2 {
        return Err(Error::invalid("need at least two points to fit"));
    }
    let limit = -1.0 / (2.0 * variance);
    let errors = xs
        .iter()
        .map(|&x| gaussian_tail_log_ratio(variance, x).map(|r| r - limit))
        .collect::<Result<Vec<_>>>()?;
    let u: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let v: Vec<f64> = errors.iter().zip(xs).map(|(e, x)| e * x * x).collect();
    let k = xs.len() as f64;
    let (mu, mv) = (u.iter().sum::<f64>() / k, v.iter().sum::<f64>() / k);
    let sxy: f64 = u.iter().zip(&v).map(|(a, b)| (a - mu) * (b - mv)).sum();
    let sxx: f64 = u.iter().map(|a| (a - mu).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("fit points must be distinct"));
    }
    let slope = sxy / sxx;
    Ok(ConvergenceFit {
        xs: xs.to_vec(),
        errors,
        slope,
        intercept: mv - slope * mu,
    })
}

/// Shuffled copy of `Σ` under a random relabeling of coordinates.
pub fn permute_covariance<R: Rng + ?Sized>(sigma: &SymMatrix, rng: &mut R) -> SymMatrix {
    let n = sigma.dim();
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    SymMatrix::from_fn(n, |i, j| sigma.get(p[i], p[j])).expect("relabeling keeps the matrix valid")
}
