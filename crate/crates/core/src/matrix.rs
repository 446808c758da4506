//! Symmetric-matrix predicates and constructions.
//!
//! Every comparison of dispersion matrices reduces to a positive
//! semidefiniteness check. Floating-point eigenvalues of genuinely singular
//! matrices land slightly below zero, so all checks use a relative tolerance:
//! `M ⪰ O` iff `λ_min(M) ≥ −tol · max(1, ‖M‖₂)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance for PSD checks.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Largest |ε| the ε-shift search will explore before giving up.
pub const EPSILON_BRACKET_CAP: f64 = 1e6;

/// Dense real symmetric matrix.
///
/// Construction symmetrizes the input as `(M + M′)/2`, so `get(i, j) ==
/// get(j, i)` holds exactly. [`SymMatrix::from_rows`], used for parsed
/// input, first rejects asymmetry beyond round-off. Serialized as a row-major array of arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix {
    inner: DMatrix<f64>,
}

impl SymMatrix {
    /// Wraps a square, finite, non-empty matrix, symmetrizing it.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 {
            return Err(Error::invalid("matrix must be at least 1x1"));
        }
        if m.nrows() != m.ncols() {
            return Err(Error::invalid(format!(
                "matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        let inner = (&m + m.transpose()) * 0.5;
        Ok(SymMatrix { inner })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::invalid(format!(
                "matrix must be square: {n} rows but a row of length {}",
                bad.len()
            )));
        }
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        // Round-off asymmetry is averaged away; anything larger is an input error.
        let skew = (&m - m.transpose()).amax();
        if skew > DEFAULT_TOL * m.amax().max(1.0) {
            return Err(Error::invalid(format!(
                "matrix is not symmetric (max |a_ij - a_ji| = {skew:e})"
            )));
        }
        Self::new(m)
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::new(DMatrix::from_fn(n, n, f))
    }

    pub fn identity(n: usize) -> Self {
        assert!(n >= 1, "dimension must be positive");
        SymMatrix {
            inner: DMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "dimension must be positive");
        SymMatrix {
            inner: DMatrix::zeros(n, n),
        }
    }

    /// The all-ones matrix 𝟙_{n×n}.
    pub fn ones(n: usize) -> Self {
        assert!(n >= 1, "dimension must be positive");
        SymMatrix {
            inner: DMatrix::from_element(n, n, 1.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.inner
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.inner.diagonal().iter().copied().collect()
    }

    /// `self + c · other`.
    pub fn add_scaled(&self, other: &SymMatrix, c: f64) -> Result<SymMatrix> {
        check_dims(self.dim(), other.dim())?;
        SymMatrix::new(&self.inner + &other.inner * c)
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.add_scaled(other, -1.0)
    }

    pub fn scale(&self, c: f64) -> Result<SymMatrix> {
        SymMatrix::new(&self.inner * c)
    }

    /// `B · self · B′` for an `m × n` matrix `B`.
    pub fn congruence(&self, b: &DMatrix<f64>) -> Result<SymMatrix> {
        check_dims(self.dim(), b.ncols())?;
        SymMatrix::new(b * &self.inner * b.transpose())
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_radius(&self) -> f64 {
        self.eigen()
            .eigenvalues
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    fn eigen(&self) -> SymmetricEigen<f64, nalgebra::Dyn> {
        SymmetricEigen::new(self.inner.clone())
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SymMatrix::from_rows(&rows)
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(m: SymMatrix) -> Self {
        m.to_rows()
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::invalid(format!(
            "tolerance must be finite and >= 0, got {tol}"
        )));
    }
    Ok(())
}

/// Certificate of a PSD check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdVerdict {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
    /// Unit eigenvector for `min_eigenvalue`; a violating direction when
    /// `is_psd` is false.
    pub witness_vector: Vec<f64>,
    /// The cut-off `tol · max(1, ‖M‖₂)` the eigenvalue was compared against.
    pub threshold: f64,
}

/// Relative-tolerance PSD check with an eigenvector witness.
pub fn is_psd(m: &SymMatrix, tol: f64) -> Result<PsdVerdict> {
    check_tol(tol)?;
    let eig = m.eigen();
    let (idx, &min_eigenvalue) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("matrix has at least one eigenvalue");
    let radius = eig
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let threshold = tol * radius.max(1.0);
    let col: DVector<f64> = eig.eigenvectors.column(idx).into_owned();
    let norm = col.norm();
    let witness_vector = col.iter().map(|v| v / norm).collect();
    Ok(PsdVerdict {
        is_psd: min_eigenvalue >= -threshold,
        min_eigenvalue,
        witness_vector,
        threshold,
    })
}

/// `A ⪯ B`, i.e. `B − A ⪰ O`.
pub fn loewner_leq(a: &SymMatrix, b: &SymMatrix, tol: f64) -> Result<PsdVerdict> {
    is_psd(&b.sub(a)?, tol)
}

/// `A = I_n − (1/n)·𝟙_{n×n}`: diagonal `(n−1)/n`, off-diagonal `−1/n`.
pub fn centering_matrix(n: usize) -> SymMatrix {
    assert!(n >= 1, "dimension must be positive");
    let nf = n as f64;
    SymMatrix {
        inner: DMatrix::from_fn(
            n,
            n,
            |i, j| {
                if i == j {
                    (nf - 1.0) / nf
                } else {
                    -1.0 / nf
                }
            },
        ),
    }
}

/// `AΣxA′ ⪯ AΣyA′` with `A` the centering matrix.
pub fn centered_loewner_leq(sx: &SymMatrix, sy: &SymMatrix, tol: f64) -> Result<PsdVerdict> {
    check_dims(sx.dim(), sy.dim())?;
    let a = centering_matrix(sx.dim());
    let ax = sx.congruence(a.as_matrix())?;
    let ay = sy.congruence(a.as_matrix())?;
    loewner_leq(&ax, &ay, tol)
}

/// Result of the search for ε with `Σy − Σx + ε·𝟙 ⪰ O`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonFeasibility {
    pub feasible: bool,
    /// A shift achieving PSD; meaningful only when `feasible`.
    pub epsilon_star: f64,
    /// Largest `λ_min(Σy − Σx + ε·𝟙)` found by the search.
    pub max_min_eigenvalue: f64,
    /// Shift at which `max_min_eigenvalue` was attained.
    pub epsilon_at_max: f64,
    /// The search reached `|ε| > EPSILON_BRACKET_CAP` without bracketing a
    /// maximum; `feasible` then reflects only the explored range.
    pub bracket_exhausted: bool,
    pub evaluations: usize,
}

/// Decides whether some real ε makes `D(ε) = Σy − Σx + ε·𝟙` PSD.
///
/// `ε ↦ λ_min(D(ε))` is concave (an infimum of affine functions), so the
/// maximum is bracketed by doubling outward from `[−1, 1]` and refined by
/// golden-section search.
pub fn epsilon_feasible(sx: &SymMatrix, sy: &SymMatrix, tol: f64) -> Result<EpsilonFeasibility> {
    check_tol(tol)?;
    let d = sy.sub(sx)?;
    let ones = SymMatrix::ones(d.dim());
    let mut evaluations = 0usize;
    let mut lam = |eps: f64| -> f64 {
        evaluations += 1;
        let shifted = &d.inner + &ones.inner * eps;
        SymmetricEigen::new(shifted)
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |acc, v| acc.min(*v))
    };

    let (mut a, mut c, mut b) = (-1.0_f64, 0.0_f64, 1.0_f64);
    let (mut fa, mut fc, mut fb) = (lam(a), lam(c), lam(b));
    let mut bracket_exhausted = false;
    while !(fc >= fa && fc >= fb) {
        if a.abs().max(b.abs()) > EPSILON_BRACKET_CAP {
            bracket_exhausted = true;
            break;
        }
        if fa > fc {
            let width = b - c;
            (b, fb) = (c, fc);
            (c, fc) = (a, fa);
            a = c - 2.0 * width;
            fa = lam(a);
        } else {
            let width = c - a;
            (a, fa) = (c, fc);
            (c, fc) = (b, fb);
            b = c + 2.0 * width;
            fb = lam(b);
        }
    }

    let (eps_best, f_best) = if bracket_exhausted {
        [(a, fa), (c, fc), (b, fb)]
            .into_iter()
            .max_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap()
    } else {
        golden_section_max(&mut lam, a, b, (c, fc))
    };

    let d0 = is_psd(&d, tol)?;
    let (feasible, epsilon_star) = if d0.is_psd {
        (true, 0.0)
    } else {
        let at_best = is_psd(&d.add_scaled(&ones, eps_best)?, tol)?;
        (at_best.is_psd, eps_best)
    };
    Ok(EpsilonFeasibility {
        feasible,
        epsilon_star,
        max_min_eigenvalue: f_best,
        epsilon_at_max: eps_best,
        bracket_exhausted,
        evaluations,
    })
}

/// Maximizes a concave function on `[a, b]`; `seed` is a known interior
/// point returned if nothing better is found.
fn golden_section_max(
    f: &mut impl FnMut(f64) -> f64,
    mut a: f64,
    mut b: f64,
    seed: (f64, f64),
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut best = seed;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..300 {
        if b - a <= 1e-12 * a.abs().max(b.abs()).max(1.0) {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    for cand in [(x1, f1), (x2, f2)] {
        if cand.1 > best.1 {
            best = cand;
        }
    }
    best
}

/// Symmetric PSD square root via eigendecomposition, clamping eigenvalues in
/// `[−tol·scale, 0)` to zero. Singular input is fine.
pub fn matrix_sqrt_psd(sigma: &SymMatrix, tol: f64) -> Result<SymMatrix> {
    check_tol(tol)?;
    let eig = sigma.eigen();
    let radius = eig
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let threshold = tol * radius.max(1.0);
    let min_eigenvalue = eig
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |acc, v| acc.min(*v));
    if min_eigenvalue < -threshold {
        return Err(Error::NotPsd {
            min_eigenvalue,
            threshold,
        });
    }
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    SymMatrix::new(v * DMatrix::from_diagonal(&roots) * v.transpose())
}

/// True when every entry equals the first one (includes the zero vector).
pub fn is_constant_vector(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] == w[1])
}
