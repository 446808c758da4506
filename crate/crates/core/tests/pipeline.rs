//! End-to-end use of the public API: models from JSON, sampling, Gini,
//! ordering experiments and tail checks.

use gini_ellipse::elliptical::{EllipticalDist, Model, RadialLaw};
use gini_ellipse::gini::{gini_as_max_permutation, gini_order_stat, gini_pairwise, GiniConvention};
use gini_ellipse::ordering::{
    run_ordering_experiment, ExperimentOptions, PredictionSource, Relation, Side, Verdict,
};
use gini_ellipse::tail::{gaussian_tail_log_ratio, ld_rate, ld_rate_for, tail_identity_check};
use gini_ellipse::{Error, SymMatrix};

fn model(json: &str) -> Model {
    serde_json::from_str(json).unwrap()
}

#[test]
fn models_parse_and_round_trip() {
    let m = model(
        r#"{"family":"scale_mixture","mu":[0,0,0],"sigma":[[1,0.3,0.3],[0.3,1,0.3],[0.3,0.3,1]],
            "base":{"kind":"normal"},"mixing":{"kind":"inverse_gamma","shape":2.5,"rate":2.5}}"#,
    );
    assert_eq!(m.dim(), 3);
    let back: Model = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
    assert_eq!(back, m);

    let bad = serde_json::from_str::<Model>(
        r#"{"family":"elliptical","mu":[0,0],"sigma":[[1,2],[2,1]],"radial":{"kind":"normal"}}"#,
    );
    assert!(bad.is_err());
    let bad_nu = serde_json::from_str::<Model>(
        r#"{"family":"elliptical","mu":[0],"sigma":[[1]],"radial":{"kind":"student_t","nu":-1}}"#,
    );
    assert!(bad_nu.is_err());
}

#[test]
fn sampled_gini_forms_agree() {
    let m = model(
        r#"{"family":"elliptical","mu":[1,-1,0.5,2],"sigma":[[2,0.5,0,0],[0.5,1,0.2,0],[0,0.2,1,0.4],[0,0,0.4,3]],
            "radial":{"kind":"kotz","shape":2,"rate":0.5,"beta":1.5}}"#,
    );
    let samples = m.sample_seeded(2000, 3).unwrap();
    for row in samples.rows() {
        let o = gini_order_stat(row, GiniConvention::UNNORMALIZED).unwrap();
        let p = gini_pairwise(row, GiniConvention::UNNORMALIZED).unwrap();
        let q = gini_as_max_permutation(row).unwrap();
        assert!((o - p).abs() <= 1e-12 * p.max(1.0));
        assert!((o - q).abs() <= 1e-12 * p.max(1.0));
    }
}

#[test]
fn first_row_shift_experiment_under_student_t() {
    let x = model(
        r#"{"family":"elliptical","mu":[0,0,0],"sigma":[[1,0,0],[0,1,0],[0,0,1]],"radial":{"kind":"student_t","nu":5}}"#,
    );
    let y = model(
        r#"{"family":"elliptical","mu":[0,0,0],"sigma":[[1,0.3,0.3],[0.3,1,0],[0.3,0,1]],"radial":{"kind":"student_t","nu":5}}"#,
    );
    let rec = run_ordering_experiment(&x, &y, 100_000, 2024, ExperimentOptions::default()).unwrap();
    assert!(rec.conditions.first_row_shift.matched);
    let t = rec
        .tests
        .iter()
        .find(|t| t.sources.contains(&PredictionSource::FirstRowShift))
        .unwrap();
    assert_eq!(t.relation, Relation::St);
    assert_eq!(t.dominant, Side::X);
    assert_eq!(t.verdict, Verdict::Consistent);
    assert!(!rec.any_violated());
}

#[test]
fn record_serializes() {
    let x = model(
        r#"{"family":"elliptical","mu":[0,0],"sigma":[[1,0],[0,1]],"radial":{"kind":"normal"}}"#,
    );
    let y = model(
        r#"{"family":"elliptical","mu":[0,0],"sigma":[[2,0],[0,2]],"radial":{"kind":"normal"}}"#,
    );
    let rec = run_ordering_experiment(&x, &y, 5000, 1, ExperimentOptions::default()).unwrap();
    let json = serde_json::to_value(&rec).unwrap();
    assert_eq!(json["seed"], 1);
    assert!(json["conditions"]["forward"]["loewner"]["is_psd"]
        .as_bool()
        .unwrap());
    assert!(json["predictions"]
        .as_array()
        .unwrap()
        .iter()
        .any(|p| p["source"] == "loewner"));
}

#[test]
fn tail_rate_and_identity_on_normal_model() {
    let dist = EllipticalDist::standard(2, RadialLaw::Normal).unwrap();
    let r = ld_rate_for(&dist).unwrap();
    assert_eq!(r.rate, -1.0 / 16.0);
    let analytic = gaussian_tail_log_ratio(r.max_diag, 40.0).unwrap();
    assert!((analytic / r.rate - 1.0).abs() < 0.05);

    let id = tail_identity_check(&dist, &[1.0, 2.0, 4.0], 50_000, 9).unwrap();
    assert!(id.pathwise_ok);
    assert!(id.rows.iter().all(|row| row.p_direct == row.p_union));

    assert!(matches!(
        ld_rate(&SymMatrix::zeros(2), &[0.0, 0.0]),
        Err(Error::Degenerate(_))
    ));
}
