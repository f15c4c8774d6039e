//! Shared fixtures for the benchmarks: the Gaussian setting with one
//! outlier among the sequences.

use mmd_outlier::simulation::gen_observations;
use mmd_outlier::{GaussianSpec, GroundTruth, KernelSpec, ObservationSet};

/// Population `MMD²` between `N(0,1)` and `N(1.5,1)` at bandwidth 1.
pub const MMD2: f64 = 0.3610;

pub fn gaussian_kernel() -> KernelSpec {
    KernelSpec::gaussian(1.0).unwrap()
}

/// `m` sequences of length `n`, sequence 0 drawn from `N(1.5,1)`.
pub fn observations(m: usize, n: usize, seed: u64) -> ObservationSet {
    let truth = GroundTruth::new(
        vec![0],
        GaussianSpec::new(0.0, 1.0).unwrap(),
        GaussianSpec::new(1.5, 1.0).unwrap(),
    );
    gen_observations(seed, m, n, &truth).unwrap()
}
