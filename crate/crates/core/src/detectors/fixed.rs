use crate::detectors::{check_t_max, decide, decide_single, Decision, FixedLengthConfig};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::scoring::{max_outliers, KernelSums, ObservationSet};

/// Fixed-length test for at most one outlier.
pub fn fixed_length_single(
    spec: &KernelSpec,
    obs: &ObservationSet,
    cfg: &FixedLengthConfig,
) -> Result<Decision> {
    let sums = KernelSums::from_observations(*spec, obs)?;
    Ok(decide_single(&sums.score_table(1)?, cfg.lambda))
}

/// Fixed-length test for an unknown number of outliers, at most `t_max`.
pub fn fixed_length_multi(
    spec: &KernelSpec,
    obs: &ObservationSet,
    cfg: &FixedLengthConfig,
    t_max: usize,
) -> Result<Decision> {
    check_t_max(obs.num_sequences(), t_max)?;
    let sums = KernelSums::from_observations(*spec, obs)?;
    Ok(decide(&sums.score_tables(t_max)?, cfg.lambda, cfg.lambda))
}

/// Fixed-length test when the number of outliers `s ≥ 1` is known: claims
/// `𝓘_s*` if `h_s > λ`, otherwise rejects.
pub fn fixed_length_known_s(
    spec: &KernelSpec,
    obs: &ObservationSet,
    cfg: &FixedLengthConfig,
    s: usize,
) -> Result<Decision> {
    let cap = max_outliers(obs.num_sequences());
    if s == 0 || s > cap {
        return Err(Error::InvalidConfig(format!("known outlier count must lie in 1..={cap}, got {s}")));
    }
    let sums = KernelSums::from_observations(*spec, obs)?;
    Ok(decide_single(&sums.score_table(s)?, cfg.lambda))
}
