//! Sample-size scaling checks: bootstrap interval width on the circle
//! model shrinks at the root-N rate, and the mean squared deviation of the
//! scalar benchmark decreases from N = 100 to N = 1000 in every study
//! repetition.

use geosens::estimators::Mode;
use geosens::inference::{bootstrap_ci, msd_study};
use geosens::manifold::ManifoldKind;
use geosens::models::{sample_study, ModelSpec};
use geosens::oracles::closed_form_example1;
use geosens::rng::{StreamKey, StreamRole};

#[test]
fn interval_width_shrinks_at_the_root_n_rate() {
    let kind = ManifoldKind::circle(2);
    let model = ModelSpec::Example2 { mu1: -5.0, mu2: 0.0, sigma1_sq: 1.0, sigma2_sq: 1.0 };
    let mut widths = Vec::new();
    for (i, n) in [300usize, 3000].into_iter().enumerate() {
        let (pairs, pool) = sample_study(&model, &[0], n, n, 57, i as u64).unwrap();
        let ci = bootstrap_ci(&pairs, &pool, &kind, Mode::IncompleteU(2000), 100, 0.95,
            StreamKey::new(57, StreamRole::Bootstrap, i as u64)).unwrap();
        assert!(ci.lower <= ci.upper);
        widths.push(ci.upper - ci.lower);
    }
    let ratio = widths[0] / widths[1];
    assert!(
        (2.4..=4.0).contains(&ratio),
        "width ratio {ratio:.3} outside the sqrt(10) window [2.4, 4.0] ({widths:?})"
    );
}

#[test]
fn msd_decreases_with_sample_size_in_every_study() {
    let model = ModelSpec::example1(1.0, 0.5);
    let dist = model.input_distribution().unwrap();
    let kind = ManifoldKind::real_line();
    let b_true = closed_form_example1(0.5, 1.0, 3.0_f64.sqrt()).unwrap().b1;
    for study in 0..5u64 {
        let rows = msd_study(
            &model,
            &dist,
            &[0],
            &kind,
            &[(100, Mode::ExactU), (1000, Mode::IncompleteU(2000))],
            30,
            b_true,
            4_400 + study,
        )
        .unwrap();
        assert!(
            rows[1].msd < rows[0].msd,
            "study {study}: MSD(1000) = {} should fall below MSD(100) = {}",
            rows[1].msd,
            rows[0].msd
        );
    }
}
