//! Built-in suite for the two-coordinate worked example and the tail
//! identity.

use std::fmt::Write as _;

use gini_ellipse::elliptical::{EllipticalDist, RadialLaw};
use gini_ellipse::stats::normal_survival;
use gini_ellipse::stream::derive_seed;
use gini_ellipse::tail::{
    gaussian_tail_log_ratio, ld_rate, permutation_matrix, tail_identity_check,
    transformed_covariance, PATHWISE_TOL,
};
use gini_ellipse::SymMatrix;
use serde::{Deserialize, Serialize};

use crate::error::CliResult;

pub const DEFAULT_SEED: u64 = 0x5eed_0f91;
/// The rate for `n = 2`, `Σ = I` claimed by an earlier analysis.
pub const PRIOR_CLAIMED_RATE: f64 = -0.4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproRow {
    pub check: String,
    pub computed: String,
    pub expected: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproduceReport {
    pub seed: u64,
    pub rows: Vec<ReproRow>,
    pub all_pass: bool,
}

fn row(check: &str, computed: impl ToString, expected: impl ToString, pass: bool) -> ReproRow {
    ReproRow {
        check: check.to_string(),
        computed: computed.to_string(),
        expected: expected.to_string(),
        pass,
    }
}

pub fn cmd_reproduce(seed: u64) -> CliResult<ReproduceReport> {
    let mut rows = Vec::new();
    let i2 = SymMatrix::identity(2);

    let perms = permutation_matrix(2)?;
    let got: Vec<Vec<i64>> = perms.rows().map(|r| r.to_vec()).collect();
    let want = vec![vec![-2, 2], vec![2, -2]];
    rows.push(row(
        "coefficient rows, n=2",
        format!("{got:?}"),
        format!("{want:?}"),
        got == want,
    ));

    let cov = transformed_covariance(&i2, &perms)?
        .full
        .expect("2 x 2 is small")
        .to_rows();
    let want = vec![vec![8.0, -8.0], vec![-8.0, 8.0]];
    rows.push(row(
        "C Sigma C', n=2, Sigma=I",
        format!("{cov:?}"),
        format!("{want:?}"),
        cov == want,
    ));

    let rate2 = ld_rate(&i2, &[0.0, 0.0])?.rate;
    rows.push(row(
        "rate, n=2, Sigma=I",
        rate2,
        "-0.0625 (-1/16)",
        (rate2 + 1.0 / 16.0).abs() < 1e-12,
    ));

    let gap = (rate2 - PRIOR_CLAIMED_RATE).abs();
    rows.push(row(
        "gap to prior claim -2/5",
        gap,
        "0.3375, nonzero",
        gap > 1e-12 && (gap - 0.3375).abs() < 1e-12,
    ));

    let rate3 = ld_rate(&SymMatrix::identity(3), &[0.0; 3])?.rate;
    rows.push(row(
        "rate, n=3, Sigma=I",
        rate3,
        "-0.015625 (-1/64)",
        (rate3 + 1.0 / 64.0).abs() < 1e-12,
    ));

    let r40 = gaussian_tail_log_ratio(8.0, 40.0)?;
    rows.push(row(
        "log P(Y>40)/40^2, var 8",
        r40,
        "within 5% of -1/16",
        (r40 / (-1.0 / 16.0) - 1.0).abs() < 0.05,
    ));
    let e20 = (gaussian_tail_log_ratio(8.0, 20.0)? + 1.0 / 16.0).abs();
    let e80 = (gaussian_tail_log_ratio(8.0, 80.0)? + 1.0 / 16.0).abs();
    rows.push(row(
        "|error| at x=80 vs x=20",
        format!("{e80:.6} vs {e20:.6}"),
        "smaller at x=80",
        e80 < e20,
    ));

    let normal2 = EllipticalDist::standard(2, RadialLaw::Normal)?;
    let count = 1_000_000;
    let id = tail_identity_check(&normal2, &[3.0], count, derive_seed(seed, 0))?;
    let p = id.rows[0].p_direct;
    let exact = 2.0 * normal_survival(3.0 / (2.0 * 2f64.sqrt()));
    let sd = (exact * (1.0 - exact) / count as f64).sqrt();
    rows.push(row(
        "P(G_2 > 3), Sigma=I, MC",
        p,
        format!("{exact:.6} +/- 3 x {sd:.2e}"),
        (p - exact).abs() <= 3.0 * sd,
    ));

    for n in 2..=4 {
        let dist = EllipticalDist::standard(n, RadialLaw::Normal)?;
        let r = tail_identity_check(&dist, &[], 100_000, derive_seed(seed, n as u64))?;
        rows.push(row(
            &format!("max-permutation identity, n={n}"),
            format!("{:.2e}", r.max_pathwise_error),
            format!("<= {PATHWISE_TOL:e}"),
            r.pathwise_ok,
        ));
    }

    let all_pass = rows.iter().all(|r| r.pass);
    Ok(ReproduceReport {
        seed,
        rows,
        all_pass,
    })
}

pub fn render_table(report: &ReproduceReport) -> String {
    let w0 = report.rows.iter().map(|r| r.check.len()).max().unwrap_or(0);
    let w1 = report
        .rows
        .iter()
        .map(|r| r.computed.len())
        .max()
        .unwrap_or(0);
    let w2 = report
        .rows
        .iter()
        .map(|r| r.expected.len())
        .max()
        .unwrap_or(0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:w0$}  {:w1$}  {:w2$}  status",
        "check", "computed", "expected"
    );
    for r in &report.rows {
        let status = if r.pass { "PASS" } else { "FAIL" };
        let _ = writeln!(
            s,
            "{:w0$}  {:w1$}  {:w2$}  {status}",
            r.check, r.computed, r.expected
        );
    }
    let _ = writeln!(
        s,
        "seed {:#x}: {}",
        report.seed,
        if report.all_pass {
            "all checks pass"
        } else {
            "FAILED"
        }
    );
    s
}
