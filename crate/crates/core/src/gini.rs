//! The Gini index of a vector in its three equivalent forms.
//!
//! ```text
//! pairwise:       Σ_{i,j} |x_i − x_j|
//! order-stat:     Σ_i (4i − 2n − 2) x_(i)
//! permutation:    max over permutations σ of Σ_i c_σ(i) x_i
//! ```
//!
//! All three agree on the unnormalized scale; the normalized index divides by
//! `n²`. The unnormalized form is the default.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `n` for which `n!` permutations are enumerated.
pub const DEFAULT_ENUMERATION_CAP: usize = 8;

/// Whether the index is divided by `n²`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GiniConvention {
    pub normalized: bool,
}

impl GiniConvention {
    pub const UNNORMALIZED: GiniConvention = GiniConvention { normalized: false };
    pub const NORMALIZED: GiniConvention = GiniConvention { normalized: true };

    fn apply(self, raw: f64, n: usize) -> f64 {
        if self.normalized {
            raw / (n * n) as f64
        } else {
            raw
        }
    }
}

/// The order-statistic coefficients `4i − 2n − 2`, `i = 1..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffVector {
    coeffs: Vec<i64>,
}

impl CoeffVector {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("coefficient vector needs n >= 1"));
        }
        let n = n as i64;
        Ok(CoeffVector {
            coeffs: (1..=n).map(|i| 4 * i - 2 * n - 2).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(|&c| c as f64).collect()
    }
}

fn check_vector(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::invalid("Gini index of an empty vector"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(
            "Gini index of a vector with non-finite entries",
        ));
    }
    Ok(())
}

/// `Σ_{i,j} |x_i − x_j|` over all ordered pairs, O(n²). Reference form.
pub fn gini_pairwise(x: &[f64], conv: GiniConvention) -> Result<f64> {
    check_vector(x)?;
    let raw: f64 = x
        .iter()
        .map(|xi| x.iter().map(|xj| (xi - xj).abs()).sum::<f64>())
        .sum();
    Ok(conv.apply(raw, x.len()))
}

/// `Σ_i (4i − 2n − 2) x_(i)`, O(n log n). Production form.
pub fn gini_order_stat(x: &[f64], conv: GiniConvention) -> Result<f64> {
    check_vector(x)?;
    let mut sorted = x.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(conv.apply(order_stat_sorted(&sorted), x.len()))
}

/// Unnormalized order-statistic sum of an already sorted slice.
pub(crate) fn order_stat_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    let raw: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, v)| (4.0 * (i + 1) as f64 - 2.0 * n - 2.0) * v)
        .sum();
    // the coefficients are antisymmetric, so rounding can only leave a tiny
    // negative residue for (near-)constant input
    raw.max(0.0)
}

/// Unnormalized Gini of every row of a row-major matrix.
pub fn gini_rows(data: &[f64], dim: usize, conv: GiniConvention) -> Vec<f64> {
    let mut buf = vec![0.0; dim];
    data.chunks_exact(dim)
        .map(|row| {
            buf.copy_from_slice(row);
            buf.sort_unstable_by(f64::total_cmp);
            conv.apply(order_stat_sorted(&buf), dim)
        })
        .collect()
}

/// Index permutations of `0..n` in lexicographic order.
pub(crate) fn lex_permutations(n: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut next = Some((0..n).collect::<Vec<_>>());
    std::iter::from_fn(move || {
        let current = next.take()?;
        let mut p = current.clone();
        // standard next-permutation step
        if let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) {
            let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
            p.swap(i - 1, j);
            p[i..].reverse();
            next = Some(p);
        }
        Some(current)
    })
}

/// `max_σ Σ_i c_σ(i) x_i` over all `n!` coefficient permutations.
pub fn gini_as_max_permutation(x: &[f64]) -> Result<f64> {
    gini_as_max_permutation_capped(x, DEFAULT_ENUMERATION_CAP)
}

pub fn gini_as_max_permutation_capped(x: &[f64], cap: usize) -> Result<f64> {
    check_vector(x)?;
    let n = x.len();
    if n > cap {
        return Err(Error::Capacity { n, cap });
    }
    let c = CoeffVector::new(n)?.to_f64();
    Ok(lex_permutations(n)
        .map(|p| p.iter().zip(x).map(|(&k, xi)| c[k] * xi).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `f(x∧y) + f(x∨y) − f(x) − f(y)`; non-negative iff `f` is supermodular at
/// this pair.
pub fn supermodular_defect(f: impl Fn(&[f64]) -> f64, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let meet: Vec<f64> = x.iter().zip(y).map(|(a, b)| a.min(*b)).collect();
    let join: Vec<f64> = x.iter().zip(y).map(|(a, b)| a.max(*b)).collect();
    Ok(f(&meet) + f(&join) - f(x) - f(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const RAW: GiniConvention = GiniConvention::UNNORMALIZED;

    #[test]
    fn coefficient_vector() {
        assert_eq!(CoeffVector::new(2).unwrap().as_slice(), &[-2, 2]);
        assert_eq!(CoeffVector::new(3).unwrap().as_slice(), &[-4, 0, 4]);
        assert_eq!(CoeffVector::new(1).unwrap().as_slice(), &[0]);
        for n in 1..=10 {
            let c = CoeffVector::new(n).unwrap();
            let c = c.as_slice();
            assert_eq!(c.iter().sum::<i64>(), 0);
            assert!(c.windows(2).all(|w| w[0] <= w[1]));
            assert!((0..n).all(|i| c[i] == -c[n - 1 - i]));
        }
        assert!(CoeffVector::new(0).is_err());
    }

    #[test]
    fn pairwise_examples() {
        assert_eq!(gini_pairwise(&[1.0, 1.0, 1.0], RAW).unwrap(), 0.0);
        assert_eq!(
            gini_pairwise(&[0.0, 1.0], GiniConvention::NORMALIZED).unwrap(),
            0.5
        );
        assert_eq!(gini_pairwise(&[0.0, 1.0], RAW).unwrap(), 2.0);
        // 2·(1 + 3 + 2) / 9
        assert_relative_eq!(
            gini_pairwise(&[1.0, 2.0, 4.0], GiniConvention::NORMALIZED).unwrap(),
            4.0 / 3.0,
            max_relative = 1e-15
        );
        assert!(gini_pairwise(&[], RAW).is_err());
        assert!(gini_order_stat(&[], RAW).is_err());
        assert!(gini_pairwise(&[1.0, f64::NAN], RAW).is_err());
    }

    #[test]
    fn order_stat_examples() {
        let (a, b) = (-0.7, 2.3);
        assert_relative_eq!(gini_order_stat(&[b, a], RAW).unwrap(), -2.0 * a + 2.0 * b);
        assert_eq!(gini_order_stat(&[5.0; 4], RAW).unwrap(), 0.0);
        assert_eq!(gini_order_stat(&[4.0, 1.0, 2.0], RAW).unwrap(), 12.0);
        assert_relative_eq!(
            gini_order_stat(&[1.0, 2.0, 4.0], RAW).unwrap(),
            9.0 * gini_pairwise(&[1.0, 2.0, 4.0], GiniConvention::NORMALIZED).unwrap(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn permutation_examples() {
        assert_eq!(gini_as_max_permutation(&[0.0, 1.0]).unwrap(), 2.0);
        assert_eq!(gini_as_max_permutation(&[3.0; 5]).unwrap(), 0.0);
        assert_eq!(gini_as_max_permutation(&[1.0, 2.0, 4.0]).unwrap(), 12.0);
        assert!(matches!(
            gini_as_max_permutation(&[0.0; 9]),
            Err(Error::Capacity { n: 9, cap: 8 })
        ));
    }

    #[test]
    fn lexicographic_enumeration() {
        let perms: Vec<Vec<usize>> = lex_permutations(3).collect();
        assert_eq!(
            perms,
            vec![
                vec![0, 1, 2],
                vec![0, 2, 1],
                vec![1, 0, 2],
                vec![1, 2, 0],
                vec![2, 0, 1],
                vec![2, 1, 0]
            ]
        );
        assert_eq!(lex_permutations(1).count(), 1);
        assert_eq!(lex_permutations(6).count(), 720);
    }

    #[test]
    fn rows_helper_matches_single_calls() {
        let data = [1.0, 2.0, 4.0, 0.0, 0.0, 0.0, -1.0, 5.0, 2.0];
        let g = gini_rows(&data, 3, RAW);
        for (k, row) in data.chunks(3).enumerate() {
            assert_eq!(g[k], gini_order_stat(row, RAW).unwrap());
        }
    }

    #[test]
    fn supermodular_defect_basics() {
        let f = |v: &[f64]| -gini_order_stat(v, RAW).unwrap();
        let x = [1.0, -2.0, 0.5];
        assert_eq!(supermodular_defect(f, &x, &x).unwrap(), 0.0);
        assert!(supermodular_defect(f, &x, &[1.0]).is_err());
    }

    fn min_defect(f: impl Fn(&[f64]) -> f64, n: usize, pairs: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut min = f64::INFINITY;
        for _ in 0..pairs {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            min = min.min(supermodular_defect(&f, &x, &y).unwrap());
        }
        min
    }

    #[test]
    fn negated_gini_is_supermodular() {
        let g = |v: &[f64]| gini_order_stat(v, RAW).unwrap();
        for n in 2..=5 {
            let m = min_defect(|v| -g(v), n, 20_000, 21 + n as u64);
            assert!(m >= -1e-9, "n = {n}: {m}");
        }
    }

    #[test]
    fn negated_square_fails_supermodularity_from_four_coordinates() {
        let g = |v: &[f64]| gini_order_stat(v, RAW).unwrap();
        // for n = 3 the index is 4·(max − min) and its square stays submodular
        let m3 = min_defect(|v| -g(v).powi(2), 3, 100_000, 5);
        assert!(m3 >= -1e-9, "{m3}");
        let m4 = min_defect(|v| -g(v).powi(2), 4, 100_000, 5);
        assert!(m4 < -1e-6, "{m4}");
    }

    fn vec_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0..10.0f64, 1..=8)
    }

    proptest! {
        #[test]
        fn three_forms_agree(x in vec_strategy()) {
            let p = gini_pairwise(&x, RAW).unwrap();
            let o = gini_order_stat(&x, RAW).unwrap();
            let m = gini_as_max_permutation(&x).unwrap();
            let scale = p.abs().max(1e-300);
            prop_assert!((p - o).abs() <= 1e-12 * scale.max(1.0));
            prop_assert!((p - m).abs() <= 1e-12 * scale.max(1.0));
            let n = x.len() as f64;
            let pn = gini_pairwise(&x, GiniConvention::NORMALIZED).unwrap();
            prop_assert!((p - n * n * pn).abs() <= 1e-12 * scale.max(1.0));
        }

        #[test]
        fn translation_invariant(x in vec_strategy(), c in -10.0..10.0f64) {
            let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
            for conv in [RAW, GiniConvention::NORMALIZED] {
                prop_assert!((gini_order_stat(&shifted, conv).unwrap() - gini_order_stat(&x, conv).unwrap()).abs() <= 1e-12);
                prop_assert!((gini_pairwise(&shifted, conv).unwrap() - gini_pairwise(&x, conv).unwrap()).abs() <= 1e-12);
            }
        }

        #[test]
        fn positively_homogeneous(x in vec_strategy(), lambda in 0.0..50.0f64) {
            let scaled: Vec<f64> = x.iter().map(|v| v * lambda).collect();
            let g = gini_order_stat(&x, RAW).unwrap();
            let gs = gini_order_stat(&scaled, RAW).unwrap();
            prop_assert!((gs - lambda * g).abs() <= 1e-12 * (lambda * g).max(1.0));
        }

        #[test]
        fn nonnegative_and_zero_only_when_constant(x in vec_strategy()) {
            let g = gini_pairwise(&x, RAW).unwrap();
            prop_assert!(g >= 0.0);
            let constant = x.windows(2).all(|w| w[0] == w[1]);
            prop_assert_eq!(g == 0.0, constant);
        }

        #[test]
        fn permutation_invariant(x in vec_strategy(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut shuffled = x.clone();
            for i in (1..shuffled.len()).rev() {
                shuffled.swap(i, rng.random_range(0..=i));
            }
            prop_assert_eq!(gini_order_stat(&x, RAW).unwrap(), gini_order_stat(&shuffled, RAW).unwrap());
        }
    }
}
