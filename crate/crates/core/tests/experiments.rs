use border_peel::experiments::{sweep, validate_lemma, OffsetScale};
use border_peel::metrics::score_against;
use border_peel::{
    cluster, estimate_lambda, generate, lemma1_expectation, GeneratorSpec, PeelParams,
};

#[test]
fn empirical_influence_is_half_n_times_closed_form() {
    let n = 50;
    let report = validate_lemma(n, 2000, 21, 77).unwrap();
    for bin in &report.bins {
        let ratio = bin.empirical / bin.analytic;
        assert!(
            (ratio / (n as f64 / 2.0) - 1.0).abs() < 0.05,
            "bin {}: ratio {ratio}",
            bin.center
        );
    }
}

#[test]
fn lemma_report_is_reproducible_and_tabulated() {
    let a = validate_lemma(20, 50, 11, 5).unwrap();
    assert_eq!(a, validate_lemma(20, 50, 11, 5).unwrap());
    let csv = a.to_csv();
    assert_eq!(csv.lines().count(), 12);
    assert!(csv.starts_with("bin_center,"));
    assert_eq!(
        a.bins[5].analytic_center,
        lemma1_expectation(a.bins[5].center, 20).unwrap()
    );
}

#[test]
fn single_cell_sweep_equals_plain_run() {
    let data = |_| generate(&GeneratorSpec::two_gaussians(5.0, 120, 3));
    let params = PeelParams::default();
    let report = sweep(
        data,
        &params,
        None,
        &[0.0],
        &[0.10],
        OffsetScale::Absolute,
        1,
    )
    .unwrap();
    let points = data(0).unwrap();
    let direct = score_against(&cluster(&points, &params, None).unwrap(), &points).unwrap();
    let cell = &report.cells[0];
    assert_eq!(cell.ari_mean, direct.ari);
    assert_eq!(cell.ami_mean, direct.ami);
    assert_eq!(cell.ari_std, 0.0);
}

#[test]
fn scaled_offsets_shift_threshold_proportionally() {
    let data = |_| generate(&GeneratorSpec::two_gaussians(5.0, 120, 3));
    let points = data(0).unwrap();
    let lambda = estimate_lambda(&points, 20).unwrap();
    let scaled = sweep(
        data,
        &PeelParams::default(),
        None,
        &[2.0],
        &[0.1],
        OffsetScale::FractionOfLambda(0.05),
        1,
    )
    .unwrap();
    let explicit = PeelParams {
        lambda: Some(lambda),
        lambda_offset: 2.0 * 0.05 * lambda,
        ..PeelParams::default()
    };
    let direct = score_against(&cluster(&points, &explicit, None).unwrap(), &points).unwrap();
    assert_eq!(scaled.cells[0].ari_mean, direct.ari);
    assert_eq!(scaled.to_csv().lines().count(), 2);
}
