use mmd_outlier::{mmd2_population_gaussian, GaussianSpec};
use mmd_outlier_bench::{gaussian_kernel, observations, MMD2};

#[test]
fn constant_matches_closed_form() {
    let pop = mmd2_population_gaussian(
        &gaussian_kernel(),
        &GaussianSpec::new(0.0, 1.0).unwrap(),
        &GaussianSpec::new(1.5, 1.0).unwrap(),
    )
    .unwrap();
    assert!((pop - MMD2).abs() < 1e-3);
}

#[test]
fn observations_are_reproducible() {
    let a = observations(5, 30, 4);
    assert_eq!((a.num_sequences(), a.len()), (5, 30));
    assert_eq!(a.sequence(0), observations(5, 30, 4).sequence(0));
}
