//! Per-sequence baseline: each sequence is tested on its own against the
//! pool of all others with a single MMD² and a threshold. This is a
//! reconstruction from a prose description of the comparison test, not a
//! transcription of its original formula.

use crate::detectors::{Decision, FixedLengthConfig};
use crate::error::Result;
use crate::kernel::KernelSpec;
use crate::scoring::{CandidateSet, KernelSums, ObservationSet};

/// Flags every `i` with `MMD²(y_i, all other sequences) > λ`.
pub fn baseline_per_sequence(
    spec: &KernelSpec,
    obs: &ObservationSet,
    cfg: &FixedLengthConfig,
) -> Result<Decision> {
    let sums = KernelSums::from_observations(*spec, obs)?;
    let m = obs.num_sequences();
    let mut flagged = Vec::new();
    for i in 0..m {
        let others: Vec<usize> = (0..m).filter(|&k| k != i).collect();
        if sums.mmd2_against_pool(i, &others)? > cfg.lambda {
            flagged.push(i);
        }
    }
    if flagged.is_empty() {
        return Ok(Decision::NoOutlier);
    }
    // Only possible when every sequence is flagged; report that as a claim
    // on all but the last rather than an invalid full set.
    if flagged.len() == m {
        flagged.pop();
    }
    Ok(Decision::Outliers(CandidateSet::new(flagged, m)?))
}
