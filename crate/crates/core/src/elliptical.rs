//! Elliptical and scale-mixture-of-elliptical distributions, realised
//! constructively.
//!
//! An elliptical vector is `X = μ + R·S·U` where `U` is uniform on the unit
//! sphere, `R ≥ 0` is the generating variate and `S = Σ^{1/2}`. A scale
//! mixture adds an independent positive `V`: `X = μ + √V·S·Z` with `Z = R·U`.
//!
//! Families are parametrized by the law of `R` ([`RadialLaw`]) rather than by
//! a characteristic generator. For laws given by a density generator `g`, the
//! radius in dimension `n` has density
//!
//! ```text
//! h_R(v) = 2 v^{n−1} g(v²) / ∫_0^∞ z^{n/2−1} g(z) dz
//! ```
//!
//! | Kind | `g(u)` | Law of the radius |
//! |------|--------|-------------------|
//! | `Normal` | `exp(−u/2)` | `R² ~ χ²(n)` |
//! | `StudentT(ν)` | `(1 + u/ν)^{−(n+ν)/2}` | `R²/n ~ F(n, ν)` |
//! | `Kotz(N, r, β)` | `u^{N−1} exp(−r u^β)` | `R^{2β} ~ Gamma((n/2+N−1)/β, rate r)` |
//! | `ExpPower(β)` | `exp(−u^β/2)` | `Kotz(1, 1/2, β)` |
//! | `TablePdf` | n/a | tabulated density of `R`, linear between knots |

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, FisherF, Gamma, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::matrix::{is_psd, matrix_sqrt_psd, SymMatrix, DEFAULT_TOL};
use crate::stream::par_blocks;

/// Tolerance on the trapezoid mass of a tabulated radial density.
const TABLE_MASS_TOL: f64 = 1e-6;

/// Law of the generating variate `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialLaw {
    Normal,
    /// Multivariate t with `nu` degrees of freedom; `nu = 1` is Cauchy.
    StudentT {
        nu: f64,
    },
    /// Kotz type: `g(u) = u^{shape−1} exp(−rate·u^beta)`.
    Kotz {
        shape: f64,
        rate: f64,
        beta: f64,
    },
    /// Exponential power with `beta ∈ (0, 1]`.
    ExpPower {
        beta: f64,
    },
    /// Tabulated density of `R` on a strictly increasing non-negative grid.
    TablePdf {
        grid: Vec<f64>,
        densities: Vec<f64>,
    },
}

impl RadialLaw {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        match self {
            RadialLaw::Normal => Ok(()),
            RadialLaw::StudentT { nu } => positive("nu", *nu),
            RadialLaw::Kotz { shape, rate, beta } => {
                if !(shape.is_finite() && *shape >= 1.0) {
                    return Err(Error::invalid(format!(
                        "Kotz shape must be >= 1, got {shape}"
                    )));
                }
                positive("rate", *rate)?;
                positive("beta", *beta)
            }
            RadialLaw::ExpPower { beta } => {
                if *beta > 0.0 && *beta <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::invalid(format!(
                        "exponential power beta must lie in (0, 1], got {beta}"
                    )))
                }
            }
            RadialLaw::TablePdf { grid, densities } => validate_table(grid, densities).map(|_| ()),
        }
    }

    /// Whether the family is a normal variance mixture (characteristic
    /// generator valid in every dimension).
    pub fn is_normal_mixture(&self) -> bool {
        match self {
            RadialLaw::Normal | RadialLaw::StudentT { .. } => true,
            RadialLaw::ExpPower { beta } => *beta <= 1.0,
            _ => false,
        }
    }

    /// Whether `E[R] < ∞`.
    pub fn has_finite_mean(&self) -> bool {
        match self {
            RadialLaw::StudentT { nu } => *nu > 1.0,
            _ => true,
        }
    }

    /// `(shape, rate, beta)` of the generalized-gamma radius, if any.
    fn generalized_gamma(&self) -> Option<(f64, f64, f64)> {
        match *self {
            RadialLaw::Kotz { shape, rate, beta } => Some((shape, rate, beta)),
            RadialLaw::ExpPower { beta } => Some((1.0, 0.5, beta)),
            _ => None,
        }
    }
}

fn validate_table(grid: &[f64], densities: &[f64]) -> Result<Vec<f64>> {
    if grid.len() < 2 || grid.len() != densities.len() {
        return Err(Error::invalid(
            "table needs at least two knots and one density per knot",
        ));
    }
    if grid[0] < 0.0 || grid.iter().any(|g| !g.is_finite()) {
        return Err(Error::invalid("table grid must be finite and non-negative"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("table grid must be strictly increasing"));
    }
    if densities.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::invalid(
            "table densities must be finite and non-negative",
        ));
    }
    let mut cum = Vec::with_capacity(grid.len());
    cum.push(0.0);
    for k in 1..grid.len() {
        let area = 0.5 * (densities[k] + densities[k - 1]) * (grid[k] - grid[k - 1]);
        cum.push(cum[k - 1] + area);
    }
    let total = *cum.last().unwrap();
    if (total - 1.0).abs() > TABLE_MASS_TOL {
        return Err(Error::invalid(format!(
            "table densities integrate to {total}, expected 1 within {TABLE_MASS_TOL}"
        )));
    }
    Ok(cum)
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    Ok(())
}

/// Uniform draw from the unit sphere `S^{n−1}` (normalized Gaussian vector).
pub fn sample_sphere<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Vec<f64>> {
    check_dim(n)?;
    let mut u = vec![0.0; n];
    fill_sphere(&mut u, rng);
    Ok(u)
}

fn fill_sphere<R: Rng + ?Sized>(u: &mut [f64], rng: &mut R) {
    loop {
        for x in u.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 && norm.is_finite() {
            u.iter_mut().for_each(|x| *x /= norm);
            return;
        }
    }
}

/// Radius sampler prepared for one `(law, n)` pair.
#[derive(Debug, Clone)]
enum RadialSampler {
    ChiSquare(ChiSquared<f64>),
    Fisher {
        f: FisherF<f64>,
        n: f64,
    },
    GenGamma {
        gamma: Gamma<f64>,
        inv_two_beta: f64,
    },
    Table(TableCdf),
}

impl RadialSampler {
    fn new(law: &RadialLaw, n: usize) -> Result<Self> {
        check_dim(n)?;
        law.validate()?;
        let nf = n as f64;
        let bad = |e: &dyn std::fmt::Display| Error::invalid(e.to_string());
        Ok(match law {
            RadialLaw::Normal => {
                RadialSampler::ChiSquare(ChiSquared::new(nf).map_err(|e| bad(&e))?)
            }
            RadialLaw::StudentT { nu } => RadialSampler::Fisher {
                f: FisherF::new(nf, *nu).map_err(|e| bad(&e))?,
                n: nf,
            },
            RadialLaw::Kotz { .. } | RadialLaw::ExpPower { .. } => {
                let (shape, rate, beta) = law.generalized_gamma().unwrap();
                let a = gen_gamma_shape(shape, beta, n)?;
                RadialSampler::GenGamma {
                    gamma: Gamma::new(a, 1.0 / rate).map_err(|e| bad(&e))?,
                    inv_two_beta: 0.5 / beta,
                }
            }
            RadialLaw::TablePdf { grid, densities } => {
                RadialSampler::Table(TableCdf::new(grid.clone(), densities.clone())?)
            }
        })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            RadialSampler::ChiSquare(d) => d.sample(rng).sqrt(),
            RadialSampler::Fisher { f, n } => (n * f.sample(rng)).sqrt(),
            RadialSampler::GenGamma {
                gamma,
                inv_two_beta,
            } => gamma.sample(rng).powf(*inv_two_beta),
            RadialSampler::Table(t) => t.inverse(rng.random::<f64>()),
        }
    }
}

/// Shape `(n/2 + N − 1)/β` of the gamma law of `R^{2β}`.
fn gen_gamma_shape(shape: f64, beta: f64, n: usize) -> Result<f64> {
    let a = (n as f64 / 2.0 + shape - 1.0) / beta;
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Normalization(format!(
            "∫ z^(n/2-1) g(z) dz diverges for n = {n}, shape = {shape}"
        )));
    }
    Ok(a)
}

#[derive(Debug, Clone)]
struct TableCdf {
    grid: Vec<f64>,
    densities: Vec<f64>,
    cum: Vec<f64>,
}

impl TableCdf {
    fn new(grid: Vec<f64>, densities: Vec<f64>) -> Result<Self> {
        let cum = validate_table(&grid, &densities)?;
        Ok(TableCdf {
            grid,
            densities,
            cum,
        })
    }

    fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    fn pdf(&self, v: f64) -> f64 {
        let g = &self.grid;
        if v < g[0] || v > *g.last().unwrap() {
            return 0.0;
        }
        let k = g.partition_point(|&x| x <= v).clamp(1, g.len() - 1) - 1;
        let h = g[k + 1] - g[k];
        let w = (v - g[k]) / h;
        (self.densities[k] * (1.0 - w) + self.densities[k + 1] * w) / self.total()
    }

    fn cdf(&self, v: f64) -> f64 {
        let g = &self.grid;
        if v <= g[0] {
            return 0.0;
        }
        if v >= *g.last().unwrap() {
            return 1.0;
        }
        let k = g.partition_point(|&x| x <= v) - 1;
        let h = g[k + 1] - g[k];
        let s = v - g[k];
        let slope = (self.densities[k + 1] - self.densities[k]) / h;
        let mass = self.cum[k] + self.densities[k] * s + 0.5 * slope * s * s;
        (mass / self.total()).clamp(0.0, 1.0)
    }

    /// Exact inverse of the piecewise-quadratic CDF.
    fn inverse(&self, u: f64) -> f64 {
        let target = u * self.total();
        // first knot whose cumulative mass exceeds the target
        let k = self
            .cum
            .partition_point(|&c| c <= target)
            .clamp(1, self.cum.len() - 1)
            - 1;
        let h = self.grid[k + 1] - self.grid[k];
        let rem = (target - self.cum[k]).max(0.0);
        let b = self.densities[k];
        let a = 0.5 * (self.densities[k + 1] - b) / h;
        let disc = (b * b + 4.0 * a * rem).max(0.0);
        let denom = b + disc.sqrt();
        let s = if denom > 0.0 { 2.0 * rem / denom } else { 0.0 };
        self.grid[k] + s.clamp(0.0, h)
    }
}

/// One draw of the generating variate for dimension `n`.
pub fn sample_radius<R: Rng + ?Sized>(radial: &RadialLaw, n: usize, rng: &mut R) -> Result<f64> {
    Ok(RadialSampler::new(radial, n)?.sample(rng))
}

/// Density of `R` in dimension `n` at `v ≥ 0`.
pub fn radial_pdf(radial: &RadialLaw, n: usize, v: f64) -> Result<f64> {
    check_dim(n)?;
    radial.validate()?;
    if v.is_nan() || v < 0.0 {
        return Err(Error::invalid(format!(
            "radius must be non-negative, got {v}"
        )));
    }
    if let RadialLaw::TablePdf { grid, densities } = radial {
        return Ok(TableCdf::new(grid.clone(), densities.clone())?.pdf(v));
    }
    let nf = n as f64;
    let half = nf / 2.0;
    // ln of 2 / ∫ z^{n/2−1} g(z) dz, and ln g(v²) with its z^{...} factors
    let (ln_norm, power, ln_g) = match *radial {
        RadialLaw::Normal => {
            let ln_int = ln_gamma(half) + half * std::f64::consts::LN_2;
            (-ln_int, nf - 1.0, -0.5 * v * v)
        }
        RadialLaw::StudentT { nu } => {
            let ln_int = half * nu.ln() + ln_beta(half, nu / 2.0);
            (-ln_int, nf - 1.0, -(nf + nu) / 2.0 * (v * v / nu).ln_1p())
        }
        RadialLaw::Kotz { .. } | RadialLaw::ExpPower { .. } => {
            let (shape, rate, beta) = radial.generalized_gamma().unwrap();
            let a = gen_gamma_shape(shape, beta, n)?;
            let ln_int = ln_gamma(a) - beta.ln() - a * rate.ln();
            // v^{n−1}·(v²)^{N−1} = v^{n+2N−3}
            (-ln_int, nf + 2.0 * shape - 3.0, -rate * (v * v).powf(beta))
        }
        RadialLaw::TablePdf { .. } => unreachable!(),
    };
    if !ln_norm.is_finite() {
        return Err(Error::Normalization(format!(
            "normalizer of {radial:?} is not finite"
        )));
    }
    if v == 0.0 {
        return Ok(if power == 0.0 {
            2.0 * ln_norm.exp()
        } else {
            0.0
        });
    }
    Ok((std::f64::consts::LN_2 + ln_norm + power * v.ln() + ln_g).exp())
}

/// Distribution function of `R` in dimension `n`.
pub fn radial_cdf(radial: &RadialLaw, n: usize, v: f64) -> Result<f64> {
    check_dim(n)?;
    radial.validate()?;
    if v <= 0.0 {
        return Ok(0.0);
    }
    if v.is_infinite() {
        return Ok(1.0);
    }
    let half = n as f64 / 2.0;
    Ok(match *radial {
        RadialLaw::Normal => gamma_lr(half, v * v / 2.0),
        RadialLaw::StudentT { nu } => beta_reg(half, nu / 2.0, v * v / (v * v + nu)),
        RadialLaw::Kotz { .. } | RadialLaw::ExpPower { .. } => {
            let (shape, rate, beta) = radial.generalized_gamma().unwrap();
            let a = gen_gamma_shape(shape, beta, n)?;
            gamma_lr(a, rate * (v * v).powf(beta))
        }
        RadialLaw::TablePdf {
            ref grid,
            ref densities,
        } => TableCdf::new(grid.clone(), densities.clone())?.cdf(v),
    })
}

/// Law of the mixing variable `V > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MixingLaw {
    PointMass { v: f64 },
    Gamma { shape: f64, rate: f64 },
    InverseGamma { shape: f64, rate: f64 },
    LogNormal { mu_log: f64, sigma_log: f64 },
    Discrete { atoms: Vec<f64>, weights: Vec<f64> },
}

impl MixingLaw {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        match self {
            MixingLaw::PointMass { v } => positive("v", *v),
            MixingLaw::Gamma { shape, rate } | MixingLaw::InverseGamma { shape, rate } => {
                positive("shape", *shape)?;
                positive("rate", *rate)
            }
            MixingLaw::LogNormal { mu_log, sigma_log } => {
                if !mu_log.is_finite() {
                    return Err(Error::invalid("mu_log must be finite"));
                }
                positive("sigma_log", *sigma_log)
            }
            MixingLaw::Discrete { atoms, weights } => {
                if atoms.is_empty() || atoms.len() != weights.len() {
                    return Err(Error::invalid("discrete mixing needs one weight per atom"));
                }
                for a in atoms {
                    positive("atom", *a)?;
                }
                if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                    return Err(Error::invalid("weights must be non-negative"));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::invalid(format!(
                        "weights sum to {total}, expected 1"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Whether `E[√V] < ∞`.
    pub fn has_finite_sqrt_mean(&self) -> bool {
        match self {
            MixingLaw::InverseGamma { shape, .. } => *shape > 0.5,
            _ => true,
        }
    }
}

#[derive(Debug, Clone)]
enum MixingSampler {
    Point(f64),
    Gamma(Gamma<f64>),
    InverseGamma {
        gamma: Gamma<f64>,
        rate: f64,
    },
    LogNormal(LogNormal<f64>),
    Discrete {
        atoms: Vec<f64>,
        index: WeightedIndex<f64>,
    },
}

impl MixingSampler {
    fn new(law: &MixingLaw) -> Result<Self> {
        law.validate()?;
        let bad = |e: &dyn std::fmt::Display| Error::invalid(e.to_string());
        Ok(match law {
            MixingLaw::PointMass { v } => MixingSampler::Point(*v),
            MixingLaw::Gamma { shape, rate } => {
                MixingSampler::Gamma(Gamma::new(*shape, 1.0 / rate).map_err(|e| bad(&e))?)
            }
            MixingLaw::InverseGamma { shape, rate } => MixingSampler::InverseGamma {
                gamma: Gamma::new(*shape, 1.0).map_err(|e| bad(&e))?,
                rate: *rate,
            },
            MixingLaw::LogNormal { mu_log, sigma_log } => {
                MixingSampler::LogNormal(LogNormal::new(*mu_log, *sigma_log).map_err(|e| bad(&e))?)
            }
            MixingLaw::Discrete { atoms, weights } => MixingSampler::Discrete {
                atoms: atoms.clone(),
                index: WeightedIndex::new(weights).map_err(|e| bad(&e))?,
            },
        })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            MixingSampler::Point(v) => *v,
            MixingSampler::Gamma(g) => g.sample(rng),
            MixingSampler::InverseGamma { gamma, rate } => rate / gamma.sample(rng),
            MixingSampler::LogNormal(d) => d.sample(rng),
            MixingSampler::Discrete { atoms, index } => atoms[index.sample(rng)],
        }
    }
}

/// Raw field layout shared by the serde forms of the distribution types.
#[derive(Deserialize)]
struct EllipticalFields {
    mu: Vec<f64>,
    sigma: SymMatrix,
    radial: RadialLaw,
}

/// `ELL_n(μ, Σ, ·)` with the family given by its radial law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EllipticalFields")]
pub struct EllipticalDist {
    mu: Vec<f64>,
    sigma: SymMatrix,
    radial: RadialLaw,
}

impl TryFrom<EllipticalFields> for EllipticalDist {
    type Error = Error;

    fn try_from(f: EllipticalFields) -> Result<Self> {
        EllipticalDist::new(f.mu, f.sigma, f.radial)
    }
}

fn validate_location(mu: &[f64], sigma: &SymMatrix) -> Result<()> {
    if mu.len() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: sigma.dim(),
            found: mu.len(),
        });
    }
    if mu.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("location has non-finite entries"));
    }
    let v = is_psd(sigma, DEFAULT_TOL)?;
    if !v.is_psd {
        return Err(Error::NotPsd {
            min_eigenvalue: v.min_eigenvalue,
            threshold: v.threshold,
        });
    }
    Ok(())
}

impl EllipticalDist {
    pub fn new(mu: Vec<f64>, sigma: SymMatrix, radial: RadialLaw) -> Result<Self> {
        validate_location(&mu, &sigma)?;
        radial.validate()?;
        Ok(EllipticalDist { mu, sigma, radial })
    }

    /// `N_n(0, I)`-shaped standard member of a family.
    pub fn standard(n: usize, radial: RadialLaw) -> Result<Self> {
        check_dim(n)?;
        Self::new(vec![0.0; n], SymMatrix::identity(n), radial)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &SymMatrix {
        &self.sigma
    }

    pub fn radial(&self) -> &RadialLaw {
        &self.radial
    }
}

#[derive(Deserialize)]
struct ScaleMixtureFields {
    mu: Vec<f64>,
    sigma: SymMatrix,
    base: RadialLaw,
    mixing: MixingLaw,
}

/// Scale mixture `X = μ + √V·Σ^{1/2}·Z` with `Z` spherical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScaleMixtureFields")]
pub struct ScaleMixture {
    mu: Vec<f64>,
    sigma: SymMatrix,
    /// Radial law of the spherical base `Z ~ ELL_n(0, I, ·)`.
    base: RadialLaw,
    mixing: MixingLaw,
}

impl TryFrom<ScaleMixtureFields> for ScaleMixture {
    type Error = Error;

    fn try_from(f: ScaleMixtureFields) -> Result<Self> {
        ScaleMixture::new(f.mu, f.sigma, f.base, f.mixing)
    }
}

impl ScaleMixture {
    pub fn new(mu: Vec<f64>, sigma: SymMatrix, base: RadialLaw, mixing: MixingLaw) -> Result<Self> {
        validate_location(&mu, &sigma)?;
        base.validate()?;
        mixing.validate()?;
        Ok(ScaleMixture {
            mu,
            sigma,
            base,
            mixing,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &SymMatrix {
        &self.sigma
    }

    pub fn base_radial(&self) -> &RadialLaw {
        &self.base
    }

    /// The spherical base `ELL_n(0, I, ·)`.
    pub fn base(&self) -> EllipticalDist {
        EllipticalDist::standard(self.dim(), self.base.clone()).expect("validated on construction")
    }

    pub fn mixing(&self) -> &MixingLaw {
        &self.mixing
    }
}

/// Row-major `count × dim` matrix of draws.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SampleMatrix {
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        if !data.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "{} values do not fill rows of width {dim}",
                data.len()
            )));
        }
        Ok(SampleMatrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }
}

/// Either kind of model compared by the ordering experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Model {
    Elliptical(EllipticalDist),
    ScaleMixture(ScaleMixture),
}

impl Model {
    pub fn dim(&self) -> usize {
        match self {
            Model::Elliptical(d) => d.dim(),
            Model::ScaleMixture(s) => s.dim(),
        }
    }

    pub fn mu(&self) -> &[f64] {
        match self {
            Model::Elliptical(d) => d.mu(),
            Model::ScaleMixture(s) => s.mu(),
        }
    }

    pub fn sigma(&self) -> &SymMatrix {
        match self {
            Model::Elliptical(d) => d.sigma(),
            Model::ScaleMixture(s) => s.sigma(),
        }
    }

    pub fn radial(&self) -> &RadialLaw {
        match self {
            Model::Elliptical(d) => d.radial(),
            Model::ScaleMixture(s) => s.base_radial(),
        }
    }

    pub fn mixing(&self) -> Option<&MixingLaw> {
        match self {
            Model::Elliptical(_) => None,
            Model::ScaleMixture(s) => Some(s.mixing()),
        }
    }

    /// Same generator: same kind, radial law and mixing law.
    pub fn same_family(&self, other: &Model) -> bool {
        self.dim() == other.dim()
            && self.radial() == other.radial()
            && self.mixing() == other.mixing()
    }

    /// Whether `E‖X‖ < ∞`.
    pub fn has_finite_mean(&self) -> bool {
        self.radial().has_finite_mean() && self.mixing().is_none_or(MixingLaw::has_finite_sqrt_mean)
    }

    /// Whether the law is a normal variance mixture.
    pub fn is_normal_mixture(&self) -> bool {
        self.radial().is_normal_mixture()
    }

    pub fn prepare(&self) -> Result<PreparedModel> {
        PreparedModel::new(self)
    }

    /// `count` draws from the block streams of `seed`, in parallel.
    pub fn sample_seeded(&self, count: usize, seed: u64) -> Result<SampleMatrix> {
        let p = self.prepare()?;
        let dim = p.dim();
        let data = par_blocks(count, seed, |rng, len| {
            let mut w = vec![0.0; dim];
            let mut out = Vec::with_capacity(len * dim);
            for _ in 0..len {
                p.draw_spherical(rng, &mut w);
                p.apply(&w, &mut out);
            }
            out
        });
        Ok(SampleMatrix { dim, data })
    }
}

/// A model with its square root and samplers precomputed.
#[derive(Debug, Clone)]
pub struct PreparedModel {
    mu: DVector<f64>,
    root: DMatrix<f64>,
    radius: RadialSampler,
    mixing: Option<MixingSampler>,
}

impl PreparedModel {
    fn new(model: &Model) -> Result<Self> {
        let root = matrix_sqrt_psd(model.sigma(), DEFAULT_TOL)?;
        Ok(PreparedModel {
            mu: DVector::from_column_slice(model.mu()),
            root: root.as_matrix().clone(),
            radius: RadialSampler::new(model.radial(), model.dim())?,
            mixing: model.mixing().map(MixingSampler::new).transpose()?,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Writes `√V·R·U` into `w`.
    pub fn draw_spherical<R: Rng + ?Sized>(&self, rng: &mut R, w: &mut [f64]) {
        let r = self.radius.sample(rng);
        fill_sphere(w, rng);
        let scale = match &self.mixing {
            Some(m) => {
                let v = m.sample(rng);
                debug_assert!(v > 0.0, "mixing draw must be positive");
                r * v.sqrt()
            }
            None => r,
        };
        w.iter_mut().for_each(|x| *x *= scale);
    }

    /// Appends `μ + S·w` to `out`.
    pub fn apply(&self, w: &[f64], out: &mut Vec<f64>) {
        let n = self.dim();
        for i in 0..n {
            let row = self.root.row(i);
            let acc: f64 = row.iter().zip(w).map(|(r, x)| r * x).sum();
            out.push(self.mu[i] + acc);
        }
    }
}

/// Draws from two same-family models sharing their `(R, U, V)` draws.
pub fn sample_coupled(
    x: &Model,
    y: &Model,
    count: usize,
    seed: u64,
) -> Result<(SampleMatrix, SampleMatrix)> {
    if !x.same_family(y) {
        return Err(Error::HypothesisViolation(
            "coupled sampling needs a common radial and mixing law".into(),
        ));
    }
    let px = x.prepare()?;
    let py = y.prepare()?;
    let dim = px.dim();
    // each draw contributes one row of x followed by one row of y
    let joint = par_blocks(count, seed, |rng, len| {
        let mut w = vec![0.0; dim];
        let mut out = Vec::with_capacity(2 * len * dim);
        for _ in 0..len {
            px.draw_spherical(rng, &mut w);
            px.apply(&w, &mut out);
            py.apply(&w, &mut out);
        }
        out
    });
    let mut xs = Vec::with_capacity(count * dim);
    let mut ys = Vec::with_capacity(count * dim);
    for pair in joint.chunks_exact(2 * dim) {
        xs.extend_from_slice(&pair[..dim]);
        ys.extend_from_slice(&pair[dim..]);
    }
    Ok((
        SampleMatrix { dim, data: xs },
        SampleMatrix { dim, data: ys },
    ))
}

fn sample_with<R: Rng + ?Sized>(model: &Model, count: usize, rng: &mut R) -> Result<SampleMatrix> {
    if count == 0 {
        return Err(Error::invalid("count must be positive"));
    }
    let p = model.prepare()?;
    let dim = p.dim();
    let mut w = vec![0.0; dim];
    let mut data = Vec::with_capacity(count * dim);
    for _ in 0..count {
        p.draw_spherical(rng, &mut w);
        p.apply(&w, &mut data);
    }
    Ok(SampleMatrix { dim, data })
}

/// Independent draws `μ + R·Σ^{1/2}·U`.
pub fn sample_elliptical<R: Rng + ?Sized>(
    dist: &EllipticalDist,
    count: usize,
    rng: &mut R,
) -> Result<SampleMatrix> {
    sample_with(&Model::Elliptical(dist.clone()), count, rng)
}

/// Independent draws `μ + √V·Σ^{1/2}·Z`.
pub fn sample_scale_mixture<R: Rng + ?Sized>(
    sm: &ScaleMixture,
    count: usize,
    rng: &mut R,
) -> Result<SampleMatrix> {
    sample_with(&Model::ScaleMixture(sm.clone()), count, rng)
}

fn numerical_rank(b: &DMatrix<f64>) -> usize {
    let sv = b.clone().svd(false, false).singular_values;
    let max = sv.iter().fold(0.0_f64, |a, v| a.max(*v));
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-10 * max).count()
}

/// `BX + b ~ ELL_m(Bμ + b, BΣB′, ·)` for `B` of full row rank `m ≤ n`.
///
/// Normal and Student t families are closed under margins and keep their
/// radial kind in the new dimension. Other radial laws are only carried over
/// when `m = n`; their lower-dimensional margins have no closed-form radius.
pub fn linear_transform_dist(
    dist: &EllipticalDist,
    b_mat: &DMatrix<f64>,
    b: &[f64],
) -> Result<EllipticalDist> {
    let (m, n) = b_mat.shape();
    if n != dist.dim() {
        return Err(Error::DimensionMismatch {
            expected: dist.dim(),
            found: n,
        });
    }
    if b.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: b.len(),
        });
    }
    let rank = numerical_rank(b_mat);
    if m > n || rank < m {
        return Err(Error::RankDeficient { rank, required: m });
    }
    let radial = match dist.radial() {
        r @ (RadialLaw::Normal | RadialLaw::StudentT { .. }) => r.clone(),
        r if m == n => r.clone(),
        r => {
            return Err(Error::Inapplicable(format!(
                "{m}-dimensional margins of the {r:?} family have no closed-form radial law"
            )))
        }
    };
    let mu = b_mat * DVector::from_column_slice(dist.mu()) + DVector::from_column_slice(b);
    let sigma = dist.sigma().congruence(b_mat)?;
    EllipticalDist::new(mu.iter().copied().collect(), sigma, radial)
}

/// Applies `x ↦ Bx + b` to every row; `B` may be rank deficient.
pub fn pushforward_samples(
    samples: &SampleMatrix,
    b_mat: &DMatrix<f64>,
    b: &[f64],
) -> Result<SampleMatrix> {
    let (m, n) = b_mat.shape();
    if n != samples.dim() {
        return Err(Error::DimensionMismatch {
            expected: samples.dim(),
            found: n,
        });
    }
    if b.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: b.len(),
        });
    }
    let mut data = Vec::with_capacity(samples.len() * m);
    for row in samples.rows() {
        for i in 0..m {
            data.push(b[i] + (0..n).map(|j| b_mat[(i, j)] * row[j]).sum::<f64>());
        }
    }
    SampleMatrix::from_flat(m, data)
}
